import numpy as np
import pytest

from groundseg.encoder import DenseFrame, LabelGrid
from groundseg.errors import ConfigError, CorruptModelError, DivergenceError, EmptyInputError
from groundseg.nn import L03_DECONV_INC, L04_CONV_DEC, TrainConfig, build_topology, train

RNG = np.random.default_rng(99)
ROWS, COLS = 64, 360


def toy_dataset(n=2, rng=RNG):
    out = []
    for _ in range(n):
        vals = rng.normal(size=(3, ROWS, COLS))
        frame = DenseFrame(vals, np.ones((ROWS, COLS), bool), normalized=True)
        ground = vals[0] > 0
        grid = LabelGrid(ground, np.ones((ROWS, COLS), bool))
        out.append((frame, grid, np.ones((ROWS, COLS), bool)))
    return out


def weights_equal(a, b):
    for wa, wb in zip(a.weights, b.weights):
        if (wa is None) != (wb is None):
            return False
        if wa is not None and not (np.array_equal(wa[0], wb[0])
                                   and np.array_equal(wa[1], wb[1])):
            return False
    return True


def test_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ConfigError):
        TrainConfig(momentum=1.0)
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0)


def test_zero_iterations_identity():
    net = build_topology(L03_DECONV_INC, 5)
    data = toy_dataset(1)
    out, history = train(net, data, TrainConfig(iterations=0))
    assert history == []
    assert weights_equal(out, net)
    assert out is not net


def test_same_seed_bit_identical():
    data = toy_dataset(3)
    cfg = TrainConfig(iterations=4, batch_size=2, rng_seed=17, log_every=0)
    net = build_topology(L03_DECONV_INC, 5)
    a, ha = train(net, data, cfg)
    b, hb = train(net, data, cfg)
    assert ha == hb
    assert weights_equal(a, b)
    assert not weights_equal(a, net)


def test_loss_decreases_on_easy_task():
    data = toy_dataset(2)
    cfg = TrainConfig(iterations=12, batch_size=2, rng_seed=0, log_every=0)
    _, history = train(build_topology(L04_CONV_DEC, 1), data, cfg)
    assert history[-1] < history[0]


def test_empty_dataset_rejected():
    with pytest.raises(EmptyInputError):
        train(build_topology(L03_DECONV_INC), [], TrainConfig(iterations=1))


def test_init_topology_mismatch():
    net = build_topology(L03_DECONV_INC)
    other = build_topology(L04_CONV_DEC)
    with pytest.raises(CorruptModelError):
        train(net, toy_dataset(1), TrainConfig(iterations=1), init=other)


def test_init_weights_used():
    data = toy_dataset(1)
    net = build_topology(L03_DECONV_INC, 5)
    init = build_topology(L03_DECONV_INC, 6)
    out, _ = train(net, data, TrainConfig(iterations=0), init=init)
    assert weights_equal(out, init)
    assert not weights_equal(out, net)


def test_divergence_detected():
    data = toy_dataset(1)
    net = build_topology(L03_DECONV_INC, 5)
    bad = net.copy()
    bad.weights[0][0][:] = 1e155  # huge weights overflow within an update
    with pytest.raises(DivergenceError) as err:
        train(bad, data, TrainConfig(iterations=3, log_every=0))
    assert err.value.iteration <= 1
    assert "iteration" in str(err.value)
