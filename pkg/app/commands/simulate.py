import argparse
import logging
from concurrent.futures import Executor
from pathlib import Path
from typing import Optional

import numpy as np

from app.commands.common import read_toml
from app.schemas.config import QLayerProbe
from app.services.circuits import (
    build_real_amplitudes,
    build_zz_feature_map,
    decompose_zz,
    format_circuit,
    parse_circuit,
)
from app.services.qlayer import qlayer_forward, qlayer_grad_features, qlayer_grad_params
from app.services.statevector import expect_z_parity, format_amplitudes

logger = logging.getLogger(__name__)


def _vector(values: np.ndarray) -> str:
    return " ".join(f"{v:.17g}" for v in values)


def register(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="run a gate list or one quantum-layer point")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--circuit", type=Path, help="gate-list text file")
    source.add_argument("--qlayer", type=Path, help="TOML with features, params, fm_reps, ansatz_reps")
    parser.add_argument("--decompose", action="store_true", help="rewrite ZZ as CX-RZ-CX first")
    parser.add_argument("--print-circuit", action="store_true", help="echo the gate list")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace, executor: Optional[Executor] = None) -> int:
    if args.circuit is not None:
        circuit = parse_circuit(args.circuit.read_text(encoding="utf-8"))
    else:
        probe = QLayerProbe.model_validate(read_toml(args.qlayer))
        cfg, features = probe.config(), probe.features
        circuit = build_zz_feature_map(features, cfg.fm_reps) + build_real_amplitudes(
            cfg.n_qubits, cfg.ansatz_reps, cfg.params
        )
    if args.decompose:
        circuit = decompose_zz(circuit)
    if args.print_circuit:
        print(format_circuit(circuit), end="")

    if args.circuit is not None:
        state = circuit.run()
        print(format_amplitudes(state))
        print(f"parity={expect_z_parity(state):.17g}")
        return 0

    print(f"p={qlayer_forward(features, cfg):.17g}")
    print(f"grad_params={_vector(qlayer_grad_params(features, cfg))}")
    print(f"grad_features={_vector(qlayer_grad_features(features, cfg))}")
    return 0
