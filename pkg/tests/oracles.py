"""Independent brute-force reference implementations used by tests only.

These are written against the documented behavior, deliberately not sharing
code with the package, so a bug would have to appear twice in different
forms to go unnoticed.
"""

import numpy as np


def flood_walk_oracle(heights, occupied, seed_col, t1, t2):
    """Reference ring flood: explicit one-cell-at-a-time walks."""
    n = len(heights)
    if not occupied[seed_col]:
        raise ValueError("seed unoccupied")
    result = {seed_col}

    def walk(direction):
        prev = seed_col
        for k in range(1, n):
            c = (seed_col + direction * k) % n
            if c in result:
                return
            if not occupied[c]:
                return
            if abs(heights[c] - heights[prev]) > t1:
                return
            if abs(heights[c] - heights[seed_col]) > t2:
                return
            result.add(c)
            prev = c

    walk(+1)
    walk(-1)
    return result


def confusion_oracle(scores, truth, threshold):
    """Confusion counts at one threshold, quadratic-free but index-by-index."""
    tp = fp = fn = tn = 0
    for s, t in zip(scores, truth):
        predicted = s >= threshold
        if predicted and t:
            tp += 1
        elif predicted and not t:
            fp += 1
        elif not predicted and t:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def pr_points_oracle(scores, truth):
    """(threshold, precision, recall, predicted) from scratch per threshold."""
    thresholds = sorted(set(list(scores) + [0.0, 1.0]))
    points = []
    for t in thresholds:
        tp, fp, fn, _ = confusion_oracle(scores, truth, t)
        precision = tp / (tp + fp) if tp + fp > 0 else 1.0
        recall = tp / (tp + fn)
        points.append((t, precision, recall, tp + fp))
    return points


def average_precision_oracle(scores, truth):
    """Step-wise area: ascending recall, precision at each step's high end."""
    points = pr_points_oracle(scores, truth)
    points.sort(key=lambda p: (p[2], -p[0]))
    area = 0.0
    prev_recall = 0.0
    for _, precision, recall, _ in points:
        area += (recall - prev_recall) * precision
        prev_recall = recall
    return area


def best_f_oracle(scores, truth):
    best = 0.0
    for _, precision, recall, _ in pr_points_oracle(scores, truth):
        if precision + recall > 0:
            best = max(best, 2 * precision * recall / (precision + recall))
    return best


def conv_oracle(x, kernel, bias, stride):
    """Six-loop cross-correlation with circular columns and zero rows."""
    b, cin, h, w = x.shape
    cout, _, kh, kw = kernel.shape
    sv, sh = stride
    hout, wout = h // sv, w // sh
    pad_top = (kh - sv) // 2
    pad_left = (kw - sh) // 2
    y = np.zeros((b, cout, hout, wout))
    for bi in range(b):
        for oc in range(cout):
            for oh in range(hout):
                for ow in range(wout):
                    acc = bias[oc] if bias is not None else 0.0
                    for ic in range(cin):
                        for i in range(kh):
                            for j in range(kw):
                                r = oh * sv + i - pad_top
                                c = (ow * sh + j - pad_left) % w
                                if 0 <= r < h:
                                    acc += x[bi, ic, r, c] * kernel[oc, ic, i, j]
                    y[bi, oc, oh, ow] = acc
    return y


def central_difference(f, x, eps=1e-5):
    """Gradient of scalar f at x by central differences, entry by entry."""
    grad = np.zeros_like(x, dtype=np.float64)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        xp = x.copy()
        xp[i] += eps
        xm = x.copy()
        xm[i] -= eps
        grad[i] = (f(xp) - f(xm)) / (2 * eps)
    return grad


def max_relative_error(a, b, floor=1e-8):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return float((np.abs(a - b) / np.maximum(floor, np.abs(a) + np.abs(b))).max())
