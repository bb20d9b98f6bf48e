"""Build benchmark bundles from categorical data and measure their difficulty.

Each class of a synthetic categorical dataset is clustered under the
shape-based distance.  The tightest cluster becomes the standard series,
and instances of other classes are injected into the test series.  The
distance band controls how unlike the baseline the injected instances are,
and KNC reflects that.
"""
from tsasd.datagen import build_bundle, generate_synthetic_categorical
from tsasd.difficulty import bundle_difficulty, knc_band

data = generate_synthetic_categorical(
    n_classes=6, per_class=100, m=64, noise_sigma=0.1, seed=0, amplitude_jitter=0.15, shift_jitter=0.05
)
print(f"{len(data.y)} instances of length {data.m}, classes {data.classes.tolist()}")

for band in ((0.0, 0.1), (0.45, 0.55), (0.9, 1.0)):
    b = build_bundle(data, k=2, distance_band=band, seed=1, min_cluster_size=12)
    d = bundle_difficulty(b)
    print(
        f"band {band}: standard {b.standard.n} pts, test {b.test.n} pts, "
        f"{len(b.truth)} injected, KNC={d['knc']:.1f} ({knc_band(d['knc'])}), RC={d['rc']:.2f}"
    )
