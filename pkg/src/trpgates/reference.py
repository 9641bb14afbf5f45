"""Published sweep points, sensitivity tables and the printed two-qubit gate.

Each table is a list of blocks; a block varies one parameter about the best
point while holding the rest fixed, and carries the published Tr P per row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from trpgates.hamiltonians import Params, SweepParams, TwoQubitParams

ONE_QUBIT_TAU0 = 80.0
TWO_QUBIT_TAU0 = 120.0


@dataclass(frozen=True)
class Block:
    axis: str
    values: tuple[float, ...]
    published: tuple[float, ...]


@dataclass(frozen=True)
class Table:
    number: int
    target: str
    center: Params
    blocks: tuple[Block, ...]


BEST_POINTS = {
    "H": SweepParams(5.8511, 2.9280e-4, ONE_QUBIT_TAU0),
    "V_P": SweepParams(5.9750, 3.8060e-4, ONE_QUBIT_TAU0),
    "V_PI8": SweepParams(6.0150, 8.1464e-4, ONE_QUBIT_TAU0),
    "NOT": SweepParams(7.3205, 2.9277e-4, ONE_QUBIT_TAU0),
    "V_CP": TwoQubitParams(
        SweepParams(5.1, 2.4e-4, TWO_QUBIT_TAU0), d1=11.702, d2=-2.6, d3=-0.41, d4=6.6650, c4=5.0003
    ),
}

BEST_TR_P = {"H": 8.82e-6, "V_P": 8.20e-5, "V_PI8": 3.03e-5, "NOT": 1.10e-5, "V_CP": 1.27e-3}

# printed realized gate at the two-qubit best point
V_CP_UA_RE = np.array(
    [
        [0.9998, 0.0155, 0.0041, 0.0028],
        [-0.0154, 0.9997, -0.0003, 0.0021],
        [0.0042, -0.0002, -0.9999, -0.0038],
        [-0.0026, -0.0021, -0.0037, 0.9999],
    ]
)
V_CP_UA_IM = np.array(
    [
        [0.0052, -0.0108, -0.0031, -0.0017],
        [-0.0109, 0.0064, -0.0084, 0.0068],
        [0.0030, 0.0084, 0.0060, -0.0079],
        [-0.0018, 0.0068, 0.0079, 0.0026],
    ]
)
V_CP_UA = V_CP_UA_RE + 1j * V_CP_UA_IM
V_CP_FIDELITY = 0.999683


def _one_qubit(number, name, lams, lam_trp, etas, eta_trp):
    return Table(
        number,
        name,
        BEST_POINTS[name],
        (Block("lam", lams, lam_trp), Block("eta4", etas, eta_trp)),
    )


TABLES = {
    1: _one_qubit(
        1, "H",
        (5.8510, 5.8511, 5.8512), (7.22e-5, 8.82e-6, 1.84e-5),
        (2.9279e-4, 2.9280e-4, 2.9281e-4), (7.03e-4, 8.82e-6, 6.14e-4),
    ),
    2: _one_qubit(
        2, "V_P",
        (5.9749, 5.9750, 5.9751), (1.56e-4, 8.20e-5, 1.43e-4),
        (3.8059e-4, 3.8060e-4, 3.8061e-4), (2.29e-3, 8.20e-5, 1.88e-3),
    ),
    3: _one_qubit(
        3, "V_PI8",
        (6.0149, 6.0150, 6.0151), (1.30e-3, 3.03e-5, 2.18e-3),
        (8.1463e-4, 8.1464e-4, 8.1465e-4), (1.77e-3, 3.03e-5, 2.77e-3),
    ),
    4: _one_qubit(
        4, "NOT",
        (7.3204, 7.3205, 7.3206), (1.12e-5, 1.10e-5, 1.22e-5),
        (2.9276e-4, 2.9277e-4, 2.9278e-4), (1.23e-3, 1.10e-5, 1.23e-3),
    ),
    5: Table(
        5, "V_CP", BEST_POINTS["V_CP"],
        (
            Block("lam", (5.0, 5.1, 5.2), (2.70e-3, 1.27e-3, 2.10e-3)),
            Block("eta4", (2.3e-4, 2.4e-4, 2.5e-4), (1.46e-3, 1.27e-3, 1.35e-3)),
        ),
    ),
    6: Table(
        6, "V_CP", BEST_POINTS["V_CP"],
        (
            Block(
                "d1",
                (11.699, 11.700, 11.701, 11.702, 11.703, 11.704, 11.705),
                (1.41e-2, 7.63e-3, 3.36e-3, 1.27e-3, 1.43e-3, 3.79e-3, 8.27e-3),
            ),
            Block(
                "d4",
                (6.6647, 6.6648, 6.6649, 6.6650, 6.6651, 6.6652, 6.6653),
                (1.31e-2, 6.35e-3, 2.40e-3, 1.27e-3, 2.97e-3, 7.59e-3, 1.50e-2),
            ),
        ),
    ),
    7: Table(
        7, "V_CP", BEST_POINTS["V_CP"],
        (
            Block(
                "c4",
                (5.0000, 5.0001, 5.0002, 5.0003, 5.0004, 5.0005, 5.0006),
                (1.98e-3, 1.55e-3, 1.36e-3, 1.27e-3, 1.38e-3, 1.65e-3, 2.11e-3),
            ),
            Block("c4", (4.999, 5.000, 5.001), (1.50e-2, 1.98e-3, 5.48e-3)),
        ),
    ),
}


def block_points(table: Table, block: Block) -> list[Params]:
    return [table.center.replace(**{block.axis: v}) for v in block.values]
