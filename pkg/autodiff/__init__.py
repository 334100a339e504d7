from .tensor import (
    PROB_EPS,
    Tensor,
    add,
    as_tensor,
    broadcast_to,
    clamp,
    clamp_prob,
    concat,
    div,
    elementwise,
    exp,
    gather_rows,
    log,
    matmul,
    mean,
    mul,
    neg,
    relu,
    reshape,
    sigmoid,
    softmax,
    stop_gradient,
    sub,
    take,
    tsum,
)

__all__ = [
    "PROB_EPS",
    "Tensor",
    "add",
    "as_tensor",
    "broadcast_to",
    "clamp",
    "clamp_prob",
    "concat",
    "div",
    "elementwise",
    "exp",
    "gather_rows",
    "log",
    "matmul",
    "mean",
    "mul",
    "neg",
    "relu",
    "reshape",
    "sigmoid",
    "softmax",
    "stop_gradient",
    "sub",
    "take",
    "tsum",
]
