"""How the evaluation measures react to a late detection.

The true anomaly covers points 100-139.  Detector A fires exactly on it;
detector B fires a few points late and only on part of it.  Point-wise
measures punish B hard, range-F1 credits it for finding the event, and the
buffered VUS measures forgive the small offset.
"""
import numpy as np

from tsasd.metrics import METRIC_TITLES, evaluate

n = 300
truth = np.zeros(n, dtype=int)
truth[100:140] = 1

exact = truth * 1.0
late = np.zeros(n)
late[135:150] = 1.0

for name, scores in (("A exact", exact), ("B late", late)):
    rec = evaluate(scores, (scores > 0.5).astype(int), truth, max_buffer=16)
    cells = "  ".join(f"{t}={v:.2f}" for t, v in zip(METRIC_TITLES, rec.as_dict().values()))
    print(f"{name}: {cells}")
