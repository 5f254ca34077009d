"""Regenerates the HDBSCAN fixtures in crates/core/tests/fixtures.

Labels come from scikit-learn's HDBSCAN. Its core distance counts the point
itself, so min_samples is one higher than the value used by cast.
"""
import json
import sys

import numpy as np
from sklearn.cluster import HDBSCAN

MIN_CLUSTER_SIZE = 5
MIN_SAMPLES = 5



def two_blobs(rng):
    blob_a = rng.normal(loc=[0.0, 0.0, 0.0], scale=0.5, size=(50, 3))
    blob_b = rng.normal(loc=[12.0, 12.0, 0.0], scale=0.5, size=(50, 3))
    noise = rng.uniform(low=-60.0, high=60.0, size=(10, 3))
    noise[:, 2] = np.abs(noise[:, 2]) + 30.0
    return np.vstack([blob_a, blob_b, noise])


def varied_density(rng):
    tight = rng.normal(loc=[0.0, 0.0, 0.0], scale=0.3, size=(40, 3))
    medium = rng.normal(loc=[6.0, 0.0, 0.0], scale=1.0, size=(60, 3))
    loose = rng.normal(loc=[0.0, 9.0, 3.0], scale=2.0, size=(50, 3))
    noise = rng.uniform(low=-8.0, high=14.0, size=(30, 3))
    return np.vstack([tight, medium, loose, noise])


def fit_labels(points, min_cluster_size, min_samples):
    model = HDBSCAN(
        min_cluster_size=min_cluster_size,
        min_samples=min_samples + 1,
        metric="euclidean",
        algorithm="brute",
        cluster_selection_method="eom",
    )
    raw = model.fit_predict(points)
    # Renumber clusters by size (descending), ties by smallest member index.
    ids = sorted({int(l) for l in raw if l >= 0},
                 key=lambda c: (-int(np.sum(raw == c)), int(np.argmax(raw == c))))
    remap = {c: i for i, c in enumerate(ids)}
    return [remap.get(int(l), -1) for l in raw]


def write(name, make, seed, min_cluster_size, min_samples, outdir):
    points = make(np.random.default_rng(seed))
    labels = fit_labels(points, min_cluster_size, min_samples)
    fixture = {
        "min_cluster_size": min_cluster_size,
        "min_samples": min_samples,
        "generator": f"numpy default_rng({seed}); sklearn.cluster.HDBSCAN "
                     f"{__import__('sklearn').__version__}, min_samples={min_samples + 1}",
        "points": points.tolist(),
        "labels": labels,
    }
    out = f"{outdir}/{name}.json"
    with open(out, "w") as f:
        json.dump(fixture, f, indent=1)
    n_clusters = len({l for l in labels if l >= 0})
    print(out, "clusters:", n_clusters, "noise:", labels.count(-1))


outdir = sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/fixtures"
write("hdbscan_two_blobs", two_blobs, 20240607, MIN_CLUSTER_SIZE, MIN_SAMPLES, outdir)
write("hdbscan_varied_density", varied_density, 11, 8, 4, outdir)
