"""Graph executor tests: each operator against plain numpy, plus validation."""

import numpy as np
import pytest
from scipy.special import expit

from edgetagger.errors import BackendExecutionError, ModelGraphError
from edgetagger.inference import GraphExecutor
from edgetagger.inference.onnx_proto import (GraphDef, NodeDef, OnnxModel,
                                             ValueDef)


def mknode(op, inputs, outputs, **attrs):
    return NodeDef(op_type=op, name=f"{op}_{outputs[0]}",
                   inputs=tuple(inputs), outputs=tuple(outputs), attrs=attrs)


def mkmodel(nodes, inputs, outputs, initializers=None):
    g = GraphDef(name="t", nodes=list(nodes),
                 initializers=dict(initializers or {}),
                 inputs=[ValueDef(n, 1, s) for n, s in inputs],
                 outputs=[ValueDef(n, 1, s) for n, s in outputs])
    return OnnxModel(ir_version=8, producer="test", opset=13, graph=g)


def run_one(node, feeds, initializers=None, out_shape=()):
    m = mkmodel([node],
                inputs=[(k, v.shape) for k, v in feeds.items()],
                outputs=[(node.outputs[0], out_shape)],
                initializers=initializers)
    return GraphExecutor(m).run(feeds)[0]


rng = np.random.default_rng(0)


def test_elementwise_ops_match_numpy():
    a = rng.normal(size=(3, 4)).astype(np.float32)
    b = rng.normal(size=(3, 4)).astype(np.float32) + 2.0
    cases = {
        "Add": a + b, "Sub": a - b, "Mul": a * b, "Div": a / b,
    }
    for op, want in cases.items():
        got = run_one(mknode(op, ["a", "b"], ["y"]), {"a": a, "b": b})
        np.testing.assert_allclose(got, want, rtol=1e-6)


def test_relu_sigmoid_softmax():
    x = np.array([[-3.0, 0.0, 2.0, 800.0, -800.0]], dtype=np.float32)
    relu = run_one(mknode("Relu", ["x"], ["y"]), {"x": x})
    np.testing.assert_array_equal(relu, np.maximum(x, 0))
    sig = run_one(mknode("Sigmoid", ["x"], ["y"]), {"x": x})
    np.testing.assert_allclose(sig, expit(x.astype(np.float64)), atol=1e-7)
    assert np.isfinite(sig).all()  # +-800 must not overflow
    sm = run_one(mknode("Softmax", ["x"], ["y"]), {"x": x / 100.0})
    ref = np.exp(x / 100.0) / np.exp(x / 100.0).sum(axis=-1, keepdims=True)
    np.testing.assert_allclose(sm, ref, rtol=1e-5)
    np.testing.assert_allclose(sm.sum(axis=-1), 1.0, rtol=1e-6)


def test_matmul_and_gemm():
    a = rng.normal(size=(2, 5)).astype(np.float32)
    w = rng.normal(size=(5, 3)).astype(np.float32)
    c = rng.normal(size=(3,)).astype(np.float32)
    got = run_one(mknode("MatMul", ["a", "w"], ["y"]), {"a": a, "w": w})
    np.testing.assert_allclose(got, a @ w, rtol=1e-6)
    gemm = run_one(mknode("Gemm", ["a", "wt", "c"], ["y"],
                          alpha=0.5, beta=2.0, transB=1),
                   {"a": a, "wt": w.T.copy(), "c": c})
    np.testing.assert_allclose(gemm, 0.5 * (a @ w) + 2.0 * c, rtol=1e-5)


def test_reshape_semantics():
    x = np.arange(12, dtype=np.float32).reshape(2, 6)
    shape = np.array([0, 3, -1], dtype=np.int64)
    got = run_one(mknode("Reshape", ["x", "s"], ["y"]),
                  {"x": x, "s": shape})
    assert got.shape == (2, 3, 2)  # 0 copies the input dim, -1 infers
    np.testing.assert_array_equal(got.reshape(2, 6), x)


def test_flatten_transpose_concat():
    x = rng.normal(size=(2, 3, 4)).astype(np.float32)
    flat = run_one(mknode("Flatten", ["x"], ["y"], axis=1), {"x": x})
    assert flat.shape == (2, 12)
    tr = run_one(mknode("Transpose", ["x"], ["y"], perm=(2, 0, 1)), {"x": x})
    np.testing.assert_array_equal(tr, np.transpose(x, (2, 0, 1)))
    cat = run_one(mknode("Concat", ["x", "x"], ["y"], axis=2), {"x": x})
    np.testing.assert_array_equal(cat, np.concatenate([x, x], axis=2))


def test_reduce_ops_axes_as_attribute_and_input():
    x = rng.normal(size=(2, 5, 3)).astype(np.float32)
    mean_attr = run_one(mknode("ReduceMean", ["x"], ["y"], axes=(1,)), {"x": x})
    np.testing.assert_allclose(mean_attr, x.mean(axis=1, keepdims=True),
                               rtol=1e-6)
    axes = np.array([2], dtype=np.int64)
    sum_inp = run_one(mknode("ReduceSum", ["x", "ax"], ["y"], keepdims=0),
                      {"x": x, "ax": axes})
    np.testing.assert_allclose(sum_inp, x.sum(axis=2), rtol=1e-6)
    mean_all = run_one(mknode("ReduceMean", ["x"], ["y"], keepdims=0), {"x": x})
    np.testing.assert_allclose(mean_all, x.mean(), rtol=1e-6)


def test_squeeze_unsqueeze_clip():
    x = rng.normal(size=(1, 4, 1)).astype(np.float32)
    sq = run_one(mknode("Squeeze", ["x", "ax"], ["y"]),
                 {"x": x, "ax": np.array([0, 2], dtype=np.int64)})
    assert sq.shape == (4,)
    un = run_one(mknode("Unsqueeze", ["x", "ax"], ["y"]),
                 {"x": sq, "ax": np.array([0], dtype=np.int64)})
    assert un.shape == (1, 4)
    clipped = run_one(mknode("Clip", ["x", "lo", "hi"], ["y"]),
                      {"x": x, "lo": np.float32(-0.5), "hi": np.float32(0.5)})
    assert clipped.min() >= -0.5 and clipped.max() <= 0.5


def test_constant_and_identity():
    const = np.array([7.0, 8.0], dtype=np.float32)
    m = mkmodel([mknode("Constant", [], ["c"], value=const),
                 mknode("Identity", ["c"], ["y"])],
                inputs=[], outputs=[("y", (2,))])
    np.testing.assert_array_equal(GraphExecutor(m).run({})[0], const)


def test_two_layer_network_matches_numpy():
    w1 = rng.normal(size=(8, 16)).astype(np.float32)
    w2 = rng.normal(size=(16, 4)).astype(np.float32)
    b = rng.normal(size=(4,)).astype(np.float32)
    x = rng.normal(size=(1, 8)).astype(np.float32)
    m = mkmodel(
        [mknode("MatMul", ["x", "w1"], ["h"]),
         mknode("Relu", ["h"], ["hr"]),
         mknode("MatMul", ["hr", "w2"], ["o"]),
         mknode("Add", ["o", "b"], ["y"])],
        inputs=[("x", (1, 8))], outputs=[("y", (1, 4))],
        initializers={"w1": w1, "w2": w2, "b": b})
    got = GraphExecutor(m).run({"x": x})[0]
    want = np.maximum(x @ w1, 0) @ w2 + b
    np.testing.assert_allclose(got, want, rtol=1e-5)


def test_repeated_runs_bit_identical():
    w = rng.normal(size=(64, 32)).astype(np.float32)
    x = rng.normal(size=(4, 64)).astype(np.float32)
    m = mkmodel([mknode("MatMul", ["x", "w"], ["mm"]),
                 mknode("Sigmoid", ["mm"], ["y"])],
                inputs=[("x", (4, 64))], outputs=[("y", (4, 32))],
                initializers={"w": w})
    ex = GraphExecutor(m)
    first = ex.run({"x": x})[0].tobytes()
    for _ in range(9):
        assert ex.run({"x": x})[0].tobytes() == first


def test_unsupported_op_rejected_at_load():
    m = mkmodel([mknode("Conv", ["x", "w"], ["y"])],
                inputs=[("x", (1, 3))], outputs=[("y", (1, 3))],
                initializers={"w": np.zeros((3, 3), dtype=np.float32)})
    with pytest.raises(ModelGraphError):
        GraphExecutor(m)


def test_dangling_input_rejected_at_load():
    m = mkmodel([mknode("Relu", ["ghost"], ["y"])],
                inputs=[("x", (1, 3))], outputs=[("y", (1, 3))])
    with pytest.raises(ModelGraphError):
        GraphExecutor(m)


def test_unproduced_output_rejected_at_load():
    m = mkmodel([mknode("Relu", ["x"], ["h"])],
                inputs=[("x", (1, 3))], outputs=[("y", (1, 3))])
    with pytest.raises(ModelGraphError):
        GraphExecutor(m)


def test_missing_feed_raises_execution_error():
    m = mkmodel([mknode("Relu", ["x"], ["y"])],
                inputs=[("x", (1, 3))], outputs=[("y", (1, 3))])
    with pytest.raises(BackendExecutionError):
        GraphExecutor(m).run({})


def test_shape_error_surfaces_as_execution_error():
    m = mkmodel([mknode("MatMul", ["x", "w"], ["y"])],
                inputs=[("x", (1, 3))], outputs=[("y", (1, 2))],
                initializers={"w": np.zeros((5, 2), dtype=np.float32)})
    with pytest.raises(BackendExecutionError):
        GraphExecutor(m).run({"x": np.zeros((1, 3), dtype=np.float32)})
