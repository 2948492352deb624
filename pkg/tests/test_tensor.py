import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

import oracles
from agar import tensor as tn
from agar.errors import CheckpointError, DimensionError, EmptyNeighborhoodError, NumericError
from helpers import check_op_grad

RNG = np.random.default_rng(0)


def floats(shape):
    return hnp.arrays(np.float64, shape, elements=st.floats(-3, 3, allow_nan=False, width=64))


# ----------------------------------------------------------------- forward values


@given(floats((4, 3)), floats((3, 5)))
def test_affine_matches_triple_loop(x, W):
    params = tn.ParameterStore(0)
    g = params.add("g", 3, 5)
    g.W.data = W.copy()
    g.b.data = np.arange(5.0)
    out = tn.affine(x, g).data
    np.testing.assert_allclose(out, oracles.matmul(x.tolist(), W.tolist()) + np.arange(5.0), atol=1e-12)


def test_affine_batched_contracts_last_axis_only():
    params = tn.ParameterStore(1)
    g = params.add("g", 3, 2)
    x = RNG.normal(size=(2, 4, 3))
    out = tn.affine(x, g).data
    assert out.shape == (2, 4, 2)
    for b in range(2):
        np.testing.assert_allclose(out[b], tn.affine(x[b], g).data, atol=1e-15)


def test_affine_width_mismatch():
    g = tn.ParameterStore(0).add("layer", 3, 2)
    with pytest.raises(DimensionError, match="layer"):
        tn.affine(np.zeros((2, 4)), g)


def test_activation_values():
    assert tn.sigmoid(tn.Tensor(0.0)).data == 0.5
    big = tn.sigmoid(tn.Tensor(np.array([-20.0, 20.0, -800.0, 800.0]))).data
    assert np.all(np.isfinite(big))
    np.testing.assert_allclose(big[:2], [1 / (1 + np.exp(20)), 1 / (1 + np.exp(-20))], rtol=1e-15)
    assert big[2] == 0.0 and big[3] == 1.0
    np.testing.assert_array_equal(tn.relu(tn.Tensor(np.array([-1.0, 0.0, 2.5]))).data, [0.0, 0.0, 2.5])
    with pytest.raises(DimensionError):
        tn.activation("tanh", tn.Tensor(1.0))


def test_max_pool_rows_example():
    x = np.array([[1.0, 5.0], [3.0, 2.0], [3.0, 0.0]])
    np.testing.assert_array_equal(tn.max_pool_rows(x).data, [3.0, 5.0])
    with pytest.raises(EmptyNeighborhoodError):
        tn.max_pool_rows(np.zeros((0, 2)))


def test_max_pool_gradient_goes_to_first_argmax():
    x = tn.Tensor(np.array([[1.0, 5.0], [3.0, 2.0], [3.0, 0.0]]), requires_grad=True)
    tn.sum(tn.max_pool_rows(x)).backward()
    np.testing.assert_array_equal(x.grad, [[0, 1], [1, 0], [0, 0]])


def test_gather_accumulates_duplicates():
    x = tn.Tensor(np.arange(6.0).reshape(3, 2), requires_grad=True)
    out = tn.gather(x, np.array([[0, 0], [2, 0]]))
    np.testing.assert_array_equal(out.data[1, 0], [4.0, 5.0])
    tn.sum(out).backward()
    np.testing.assert_array_equal(x.grad, [[3, 3], [0, 0], [1, 1]])


def test_gather_batched():
    x = RNG.normal(size=(2, 5, 3))
    idx = np.array([[[4, 1]], [[0, 0]]])
    out = tn.gather(x, idx).data
    assert out.shape == (2, 1, 2, 3)
    np.testing.assert_array_equal(out[1, 0, 0], x[1, 0])
    np.testing.assert_array_equal(out[0, 0, 0], x[0, 4])


# ----------------------------------------------------------------- gradients vs FD


@pytest.mark.parametrize(
    "build,shapes",
    [
        (lambda a, b: tn.add(a, b), [(3, 4), (4,)]),
        (lambda a, b: tn.sub(a, b), [(3, 1), (3, 4)]),
        (lambda a, b: tn.mul(a, b), [(2, 3, 4), (3, 1)]),
        (lambda a: tn.square(a), [(5,)]),
        (lambda a: tn.relu(a), [(4, 3)]),
        (lambda a: tn.sigmoid(a), [(4, 3)]),
        (lambda a: tn.sum(a, axis=1), [(3, 4)]),
        (lambda a: tn.mean(a, axis=0), [(3, 4)]),
        (lambda a: tn.mean(a), [(3, 4)]),
        (lambda a: tn.max_pool(a, axis=-2), [(2, 5, 3)]),
        (lambda a, b: tn.concat([a, b], axis=-1), [(2, 3), (2, 2)]),
        (lambda a: tn.broadcast_to(a, (4, 3)), [(1, 3)]),
        (lambda a: tn.reshape(a, (6,)), [(2, 3)]),
        (lambda a: tn.getitem(a, (slice(None), slice(1, 3))), [(2, 4)]),
        (lambda a: tn.gather(a, np.array([[0, 3, 3], [1, 1, 2]])), [(4, 2)]),
        (lambda a: tn.gather(a, np.array([[2, 2], [0, 1]])), [(2, 3, 2)]),
    ],
)
def test_op_gradients(build, shapes):
    arrays = [RNG.normal(size=s) for s in shapes]
    check_op_grad(build, *arrays)


def test_affine_gradients():
    params = tn.ParameterStore(3)
    g = params.add("g", 4, 3)
    x = tn.Tensor(RNG.normal(size=(2, 5, 4)), requires_grad=True)
    err = tn.grad_check(lambda: tn.sum(tn.square(tn.affine(x, g))), params)
    assert err < 1e-6
    check_op_grad(lambda a: tn.affine(a, g), x.data)


def test_linear_rows_equals_weight_block():
    params = tn.ParameterStore(3)
    g = params.add("g", 7, 3)
    x = RNG.normal(size=(4, 2))
    np.testing.assert_allclose(tn.linear_rows(x, g.W, 2, 4).data, x @ g.W.data[2:4], atol=0)
    err = tn.grad_check(lambda: tn.sum(tn.square(tn.linear_rows(x, g.W, 2, 4))), params)
    assert err < 1e-6
    with pytest.raises(DimensionError):
        tn.linear_rows(x, g.W, 0, 3)


def _edge_max_reference(node, table, index, geo, W, lo, tag, tag_row):
    G = geo.shape[-1]
    total = node[..., :, None, :] + geo @ W[lo : lo + G]
    if table is not None:
        b = np.arange(table.shape[0])[:, None, None] if table.ndim == 3 else None
        total = total + (table[b, index] if b is not None else table[index])
    if tag is not None:
        total = total + tag[:, None] * W[tag_row]
    return total.max(axis=-2)


@pytest.mark.parametrize("batched", [False, True])
@pytest.mark.parametrize("with_table", [False, True])
def test_edge_max_matches_dense_composition(batched, with_table):
    lead = (2,) if batched else ()
    N, K, S, C, G = 5, 3, 6, 4, 3
    params = tn.ParameterStore(0)
    grp = params.add("w", 9, C)
    node = RNG.normal(size=lead + (N, C))
    table = RNG.normal(size=lead + (S, C)) if with_table else None
    index = RNG.integers(0, S, size=lead + (N, K))
    geo = RNG.normal(size=lead + (N, K, G))
    tag = np.array([0.0, 1.0, 1.0])
    out = tn.edge_max(node, geo, grp.W, 2, table=table, index=index, tag=tag, tag_row=8)
    ref = _edge_max_reference(node, table, index, geo, grp.W.data, 2, tag, 8)
    np.testing.assert_allclose(out.data, ref, atol=1e-14)

    tensors = [tn.Tensor(node, requires_grad=True)]
    if with_table:
        tensors.append(tn.Tensor(table, requires_grad=True))
    params.groups["node"] = tn.ParamGroup("node", tensors[0], tn.Tensor(np.zeros(0), True))
    if with_table:
        params.groups["table"] = tn.ParamGroup("table", tensors[1], tn.Tensor(np.zeros(0), True))

    def f():
        t = tensors[1] if with_table else None
        return tn.sum(tn.square(tn.edge_max(tensors[0], geo, grp.W, 2, table=t, index=index, tag=tag, tag_row=8)))

    assert tn.grad_check(f, params, samples=200) < 1e-6


def test_edge_max_rejects_bad_input():
    W = tn.ParameterStore(0).add("w", 5, 2).W
    with pytest.raises(EmptyNeighborhoodError):
        tn.edge_max(np.zeros((3, 2)), np.zeros((3, 0, 3)), W, 0)
    with pytest.raises(DimensionError):
        tn.edge_max(np.zeros((3, 2)), np.zeros((3, 2, 3)), W, 0, table=np.zeros((2, 2)), index=np.full((3, 2), 5))


def test_backward_accumulates_over_shared_subgraph():
    x = tn.Tensor(np.array([2.0, -1.0]), requires_grad=True)
    y = tn.mul(x, x)
    z = tn.sum(tn.add(y, y))
    z.backward()
    np.testing.assert_array_equal(x.grad, 4 * x.data)


def test_no_grad_records_nothing():
    x = tn.Tensor(np.ones(3), requires_grad=True)
    with tn.no_grad():
        y = tn.mul(x, 2.0)
    assert not y.requires_grad and y._parents == ()
    assert tn.grad_enabled()


# ----------------------------------------------------------------- parameters & optimiser


def test_parameter_store_init_is_seeded_glorot():
    a, b = tn.ParameterStore(7), tn.ParameterStore(7)
    ga, gb = a.add("g", 10, 20), b.add("g", 10, 20)
    np.testing.assert_array_equal(ga.W.data, gb.W.data)
    limit = np.sqrt(6 / 30)
    assert np.abs(ga.W.data).max() <= limit
    assert not np.any(ga.b.data)
    assert not np.array_equal(tn.ParameterStore(8).add("g", 10, 20).W.data, ga.W.data)
    with pytest.raises(ValueError):
        a.add("g", 1, 1)


def _scalar_adam(w, steps, lr, b1=0.9, b2=0.999, eps=1e-8):
    m = v = 0.0
    for t in range(1, steps + 1):
        g = 2.0 * w
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        w -= lr * (m / (1 - b1**t)) / ((v / (1 - b2**t)) ** 0.5 + eps)
    return w


def test_adam_minimises_scalar_quadratic():
    params = tn.ParameterStore(0)
    g = params.add("w", 1, 1)
    g.W.data = np.array([[0.5]])
    opt = tn.Adam(params, lr=1e-2, clip=None)
    for _ in range(200):
        params.zero_grad()
        tn.sum(tn.square(g.W)).backward()
        opt.step()
    assert abs(g.W.data[0, 0]) < 1e-2
    assert g.W.data[0, 0] == pytest.approx(_scalar_adam(0.5, 200, 1e-2), abs=1e-15)


def test_adam_zero_gradient_leaves_parameters():
    params = tn.ParameterStore(0)
    params.add("w", 3, 2)
    before = params.arrays()
    for _, t in params.tensors():
        t.grad = np.zeros_like(t.data)
    tn.optimizer_step(tn.Adam(params, lr=0.1))
    assert all(np.array_equal(before[k], v) for k, v in params.arrays().items())


def test_clip_bound_is_exact():
    params = tn.ParameterStore(0)
    g = params.add("w", 4, 4)
    g.W.grad = RNG.normal(scale=20, size=(4, 4))
    clipped = tn.Adam(params, clip=5.0).clipped_grads()["w/W"]
    assert np.abs(clipped).max() == 5.0


def test_adam_first_step_moves_by_lr_times_sign():
    params = tn.ParameterStore(0)
    g = params.add("w", 1, 2)
    g.W.data = np.array([[1.0, -1.0]])
    opt = tn.Adam(params, lr=0.1, clip=5.0)
    tn.sum(tn.mul(g.W, np.array([7.3, -0.2]))).backward()
    np.testing.assert_array_equal(opt.clipped_grads()["w/W"], [[5.0, -0.2]])
    opt.step()
    np.testing.assert_allclose(g.W.data, [[0.9, -0.9]], atol=1e-7)


def test_adam_rejects_non_finite_gradient_without_update():
    params = tn.ParameterStore(0)
    g = params.add("w", 2, 2)
    before = params.arrays()
    g.W.grad = np.array([[np.nan, 0.0], [0.0, 0.0]])
    opt = tn.Adam(params)
    with pytest.raises(NumericError, match="w/W"):
        opt.step()
    assert all(np.array_equal(before[k], v) for k, v in params.arrays().items())
    assert opt.t == 0


def test_grad_check_quadratic_is_tight():
    params = tn.ParameterStore(4)
    g = params.add("w", 5, 3)
    g.b.data = RNG.normal(size=3)
    f = lambda: tn.add(tn.sum(tn.square(g.W)), tn.sum(tn.square(g.b)))  # noqa: E731
    assert tn.grad_check(f, params) <= 1e-9


def test_grad_check_rejects_non_finite_loss():
    params = tn.ParameterStore(4)
    g = params.add("w", 2, 2)
    with pytest.raises(NumericError):
        tn.grad_check(lambda: tn.mul(tn.sum(g.W), np.inf), params)


def test_grad_check_catches_wrong_gradients():
    params = tn.ParameterStore(2)
    g = params.add("g", 3, 2)
    x = RNG.normal(size=(4, 3))

    def f():
        return tn.sum(tn.square(tn.affine(x, g)))

    assert tn.grad_check(f, params) < 1e-7
    params.zero_grad()
    f().backward()
    wrong = {k: t.grad.copy() for k, t in params.tensors()}
    wrong["g/W"][1, 0] *= 2.0
    assert tn.grad_check(f, params, grads=wrong) > 0.1


# ----------------------------------------------------------------- checkpoints


def test_checkpoint_round_trip_is_bit_exact(tmp_path):
    params = tn.ParameterStore(11)
    params.add("a", 3, 4)
    params.add("b.1", 4, 1)
    params["a"].W.data[0, 0] = np.nextafter(1.0, 2.0)
    path = tmp_path / "ck.agar"
    tn.save_checkpoint(path, params)
    assert path.read_bytes()[:8] == b"AGARCKPT"
    other = tn.ParameterStore(0)
    other.add("a", 3, 4)
    other.add("b.1", 4, 1)
    tn.load_checkpoint(path, other)
    assert tn.parameters_equal(params, other)
    assert other.seed == 11
    seed, arrays = tn.read_checkpoint(path)
    assert seed == 11 and set(arrays) == {"a/W", "a/b", "b.1/W", "b.1/b"}


def test_checkpoint_errors(tmp_path):
    params = tn.ParameterStore(0)
    params.add("a", 2, 2)
    path = tmp_path / "ck.agar"
    tn.save_checkpoint(path, params)
    raw = path.read_bytes()
    (tmp_path / "bad").write_bytes(b"NOTACKPT" + raw[8:])
    (tmp_path / "short").write_bytes(raw[:-5])
    for name in ("bad", "short"):
        with pytest.raises(CheckpointError):
            tn.read_checkpoint(tmp_path / name)
    wrong = tn.ParameterStore(0)
    wrong.add("a", 2, 3)
    with pytest.raises(CheckpointError, match="a/W"):
        tn.load_checkpoint(path, wrong)
    renamed = tn.ParameterStore(0)
    renamed.add("z", 2, 2)
    with pytest.raises(CheckpointError):
        tn.load_checkpoint(path, renamed)
