"""Synthetic annotated benchmarks for demos and tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .labels import BINARY_SCALE, AnnotationTable, ItemRatings


@dataclass(frozen=True)
class SyntheticBenchmark:
    annotations: AnnotationTable
    scores: dict[str, np.ndarray]  # aligned with annotations.item_ids
    truth: np.ndarray


def make_benchmark(
    n_items: int = 300,
    n_models: int = 4,
    n_annotators: int = 3,
    flip_noise: float = 0.25,
    prevalence: float = 0.4,
    model_noise: tuple[float, ...] | None = None,
    seed: int = 0,
) -> SyntheticBenchmark:
    """Binary votes from annotators who each flip the latent truth at random.

    Model ``k`` scores ``truth + N(0, model_noise[k])``; by default the noise
    levels are close together so the model ranking is not trivially stable.
    """
    rng = np.random.default_rng(seed)
    truth = (rng.random(n_items) < prevalence).astype(np.int64)
    flips = rng.random((n_items, n_annotators)) < flip_noise
    votes = truth[:, None] ^ flips
    width = len(str(n_items - 1))
    ids = [f"item{i:0{width}d}" for i in range(n_items)]
    items = tuple(
        ItemRatings(
            ids[i],
            tuple(float(v) for v in votes[i]),
            tuple(f"a{j}" for j in range(n_annotators)),
        )
        for i in range(n_items)
    )
    if model_noise is None:
        model_noise = tuple(np.linspace(0.8, 1.1, n_models))
    scores = {
        f"model{k}": truth + rng.normal(0.0, sd, size=n_items)
        for k, sd in enumerate(model_noise)
    }
    return SyntheticBenchmark(AnnotationTable(items, BINARY_SCALE), scores, truth)
