import numpy as np
import pytest

from mlcommunity import MldcsbmParams, MultiLayerNetwork, NodeLabels, sample_network


def random_network(rng, n, L, p=0.3, loops=True):
    """Symmetric binary layers with independent Bernoulli(p) entries."""
    layers = []
    for _ in range(L):
        upper = np.triu(rng.random((n, n)) < p, k=0 if loops else 1)
        layers.append((upper | upper.T).astype(np.int64))
    return MultiLayerNetwork.from_dense(layers)


def planted_params(n, K, L, within=0.9, between=0.05, theta=None, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.tile(np.arange(1, K + 1), n // K + 1)[:n]
    rng.shuffle(labels)
    B = np.full((K, K), between)
    np.fill_diagonal(B, within)
    th = np.ones(n) if theta is None else theta
    return MldcsbmParams(NodeLabels(labels, K), th, np.repeat(B[None], L, axis=0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def p3():
    """Path 1-2-3 as a single-layer network."""
    return MultiLayerNetwork.from_dense([[[0, 1, 0], [1, 0, 1], [0, 1, 0]]])


@pytest.fixture
def planted_net():
    params = planted_params(60, 2, 5)
    return params, sample_network(params, 7)
