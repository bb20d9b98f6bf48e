"""Judge a test series against a standard series.

A noisy sine wave is the standard series.  We train a KNN pipeline on it,
then score two test series: a clean continuation and one with a flattened
stretch.  The health indicator stays at zero on the first and climbs past
the threshold on the second.
"""
import numpy as np

from tsasd.core import TimeSeries, WindowConfig, labels_to_ranges
from tsasd.detectors import DetectorSpec
from tsasd.pipeline import PipelineConfig, test, train

rng = np.random.default_rng(0)
t = np.arange(1600)
wave = np.sin(2 * np.pi * t / 40) + 0.05 * rng.standard_normal(t.size)

standard = TimeSeries(wave[:1000], "standard")
clean = TimeSeries(wave[1000:1300], "clean")
broken = wave[1300:1600].copy()
broken[120:180] = 0.2  # sensor stuck
broken = TimeSeries(broken, "broken")

# "acf" picks the window from the autocorrelation of the training part
cfg = PipelineConfig(window=WindowConfig.parse("acf"), detector=DetectorSpec("KNN", {"k": 5}))
tp = train(standard, cfg)
print(f"window length chosen from the ACF: {tp.window.length}")
print(f"validation scores: mu={tp.decision.mu:.4f} sigma={tp.decision.sigma:.4f}, threshold T={tp.decision.threshold:.6f}")

for series in (clean, broken):
    scores, health, labels = test(tp, series)
    spans = [(r.start, r.end) for r in labels_to_ranges(labels)]
    print(f"{series.name:>7}: max health {health.max():.3f}, flagged ranges {spans}")
