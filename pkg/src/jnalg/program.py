"""Lower expression DAGs to a flat register program and run it on a batch.

The kernel that executes programs comes in two flavours with the same
signature: a Cython extension (``jnalg._kernel``) and a numpy fallback
(``jnalg._kernel_py``).  The extension is used when it imports, unless
``JNALG_PURE_PYTHON`` is set in the environment.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import expr as ex
from .expr import DomainError, Expr, VarSpace

OP_CONST, OP_VAR, OP_ADD, OP_MUL, OP_POWI, OP_EXP, OP_LN, OP_SIN, OP_COS = range(9)
_FUNC_OPS = {ex.EXP: OP_EXP, ex.LN: OP_LN, ex.SIN: OP_SIN, ex.COS: OP_COS}

ERR_NONE, ERR_LN, ERR_DIV = 0, 1, 2

if os.environ.get("JNALG_PURE_PYTHON"):
    from ._kernel_py import run_program

    BACKEND = "python"
else:
    try:
        from ._kernel import run_program

        BACKEND = "cython"
    except ImportError:  # extension not built
        from ._kernel_py import run_program

        BACKEND = "python"


@dataclass(frozen=True)
class Program:
    ops: np.ndarray  # int32 opcode per register
    a: np.ndarray  # int32 operand / constant index / variable column
    b: np.ndarray  # int32 second operand or integer exponent
    consts: np.ndarray  # float64
    outputs: np.ndarray  # int32 register per requested expression
    nodes: tuple  # register -> originating Expr (for error reports)
    nvars: int

    @property
    def size(self) -> int:
        return len(self.ops)


def compile_exprs(exprs: Sequence[Expr], vars: VarSpace) -> Program:
    """Flatten ``exprs`` (sharing common subtrees) into a register program."""
    ops: list[int] = []
    a: list[int] = []
    b: list[int] = []
    nodes: list[Expr] = []
    consts: list[float] = []
    const_slot: dict[float, int] = {}
    slot: dict[int, int] = {}

    def emit(op: int, x: int, y: int, node: Expr) -> int:
        ops.append(op)
        a.append(x)
        b.append(y)
        nodes.append(node)
        return len(ops) - 1

    for n in ex.postorder(list(exprs)):
        k = n.kind
        if k == ex.CONST:
            v = n.value
            r = const_slot.get(v)
            if r is None:
                consts.append(v)
                r = emit(OP_CONST, len(consts) - 1, 0, n)
                const_slot[v] = r
        elif k == ex.VAR:
            if n.value not in vars:
                raise KeyError(f"coordinate {n.value!r} not in {vars!r}")
            r = emit(OP_VAR, vars.index(n.value), 0, n)
        elif k in (ex.ADD, ex.MUL):
            op = OP_ADD if k == ex.ADD else OP_MUL
            args = n.args
            r = slot[id(args[0])]
            for arg in args[1:]:
                r = emit(op, r, slot[id(arg)], n)
        elif k == ex.POW:
            r = emit(OP_POWI, slot[id(n.args[0])], n.value, n)
        else:
            r = emit(_FUNC_OPS[k], slot[id(n.args[0])], 0, n)
        slot[id(n)] = r

    return Program(
        ops=np.asarray(ops, dtype=np.int32),
        a=np.asarray(a, dtype=np.int32),
        b=np.asarray(b, dtype=np.int32),
        consts=np.asarray(consts, dtype=np.float64),
        outputs=np.asarray([slot[id(e)] for e in exprs], dtype=np.int32),
        nodes=tuple(nodes),
        nvars=len(vars),
    )


def execute(prog: Program, points: np.ndarray, kernel=None) -> np.ndarray:
    """Values of every program output at every point, shape (K, n_outputs)."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != prog.nvars:
        raise ValueError(f"points must have shape (K, {prog.nvars})")
    if not np.all(np.isfinite(points)):
        raise ValueError("sample points must be finite")
    run = run_program if kernel is None else kernel
    out, err, err_slot, err_point = run(
        prog.ops, prog.a, prog.b, prog.consts, points, prog.outputs
    )
    if err != ERR_NONE:
        node = prog.nodes[err_slot]
        what = "ln of non-positive value" if err == ERR_LN else "division by ~0"
        raise DomainError(f"{what} in {node} at sample point {err_point}", node)
    return out


def evaluate_many(exprs: Sequence[Expr], vars: VarSpace, points: np.ndarray) -> np.ndarray:
    if not exprs:
        return np.zeros((len(points), 0))
    return execute(compile_exprs(exprs, vars), points)
