"""Independent reference computations used only by the tests."""

from itertools import combinations


def textbook_auroc(scores, labels):
    """Mann-Whitney pair count: P(score_pos > score_neg), ties count 1/2."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = 0.0
    for a in pos:
        for b in neg:
            wins += 1.0 if a > b else 0.5 if a == b else 0.0
    return wins / (len(pos) * len(neg))


def textbook_ap(scores, labels):
    """Mean of precision@k over the ranks k of the positives (scores distinct)."""
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    hits = 0
    precisions = []
    for k, i in enumerate(order, start=1):
        if labels[i] == 1:
            hits += 1
            precisions.append(hits / k)
    return sum(precisions) / len(precisions)


def inversion_set(first: dict, second: dict):
    """Model pairs ordered strictly oppositely by two metric dicts."""
    out = set()
    for a, b in combinations(sorted(first), 2):
        order1 = int(first[a] > first[b]) - int(first[a] < first[b])
        order2 = int(second[a] > second[b]) - int(second[a] < second[b])
        if order1 * order2 == -1:
            out.add((a, b))
    return out


def kendall_by_pairs(x, y):
    """Tau-a counting for untied data: (C - D) / C(n, 2)."""
    c = d = 0
    for i, j in combinations(range(len(x)), 2):
        s = (x[i] - x[j]) * (y[i] - y[j])
        c += s > 0
        d += s < 0
    return (c - d) / (len(x) * (len(x) - 1) / 2)
