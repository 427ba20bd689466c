"""Command-line interface: synthetic / calibrate / evaluate / decide.

Exit codes: 0 success, 1 validation failure, 2 parse failure, 64 usage
error. The PARITY_CAL_PRESET environment variable fills hyperparameter
defaults by name ('covid' or 'default'); explicit flags always win.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import fileio
from .calibrate import ScheduleConfig, run_stream
from .decision import simulate_policy
from .distributions import parity_outcome, parity_prob, to_quantile_set
from .errors import ParityCalError, ParseError
from .metrics import metrics_report, parity_reliability
from .synthetic import generate

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PARSE = 2
EXIT_USAGE = 64

PRESET_ENV = "PARITY_CAL_PRESET"


@dataclass(frozen=True)
class CliPreset:
    """Hyperparameter defaults selectable through PARITY_CAL_PRESET."""

    gamma: float
    cap_d: float
    mw_uf: int
    mw_ws: int
    iw_uf: int


CLI_PRESETS = {
    "default": CliPreset(gamma=0.1, cap_d=1.0, mw_uf=100, mw_ws=100, iw_uf=100),
    # weekly epidemic-count tuning: slow online steps, tight windows
    "covid": CliPreset(gamma=0.001, cap_d=10.0, mw_uf=1, mw_ws=10, iw_uf=5),
}


@dataclass(frozen=True)
class RunConfig:
    """Resolved flag values for one CLI invocation."""

    method: str = "ops"
    uf: int = 100
    ws: int = 100
    gamma: float = 0.1
    cap_d: float = 1.0
    n_bins: int = 30
    n_levels: int = 100
    seed: int = 0
    input: Path | None = None
    output: Path | None = None

    def schedule(self) -> ScheduleConfig:
        return ScheduleConfig(
            method=self.method, uf=self.uf, ws=self.ws, gamma=self.gamma, cap_d=self.cap_d
        )


class _Parser(argparse.ArgumentParser):
    """argparse flavor whose usage failures exit with code 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _resolve_preset() -> CliPreset:
    name = os.environ.get(PRESET_ENV, "default")
    try:
        return CLI_PRESETS[name]
    except KeyError:
        raise ParityCalError(
            f"unknown {PRESET_ENV} value {name!r}; choose from {sorted(CLI_PRESETS)}"
        ) from None


def _build_parser() -> _Parser:
    parser = _Parser(prog="paritycal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_syn = sub.add_parser("synthetic", help="write the alternating half-normal benchmark stream")
    p_syn.add_argument("--horizon", type=int, required=True, help="stream length T (>= 2)")
    p_syn.add_argument("--seed", type=int, default=0)
    p_syn.add_argument("--output", type=Path, required=True, help="forecast CSV to write")

    p_cal = sub.add_parser("calibrate", help="extract parity probabilities and calibrate them")
    p_cal.add_argument("--input", type=Path, required=True, help="forecast CSV")
    p_cal.add_argument("--output", type=Path, required=True, help="records CSV to write")
    p_cal.add_argument("--method", choices=("none", "mw", "iw", "ops"), default="ops")
    p_cal.add_argument("--uf", type=int, default=None, help="refit every uf steps (mw/iw)")
    p_cal.add_argument("--ws", type=int, default=None, help="moving-window size (mw)")
    p_cal.add_argument("--gamma", type=float, default=None, help="online step-size knob (ops)")
    p_cal.add_argument("--cap-d", type=float, default=None, help="online regularization knob (ops)")

    p_eval = sub.add_parser("evaluate", help="score a records CSV")
    p_eval.add_argument("--input", type=Path, required=True, help="records CSV")
    p_eval.add_argument("--output", type=Path, required=True, help="metrics JSON to write")
    p_eval.add_argument(
        "--diagram", type=Path, default=None,
        help="reliability diagram CSV (default: <output>.diagram.csv)",
    )
    p_eval.add_argument("--plot", type=Path, default=None, help="optional SVG reliability plot")
    p_eval.add_argument(
        "--forecasts", type=Path, default=None,
        help="forecast CSV whose quantile coverage adds the qce field",
    )
    p_eval.add_argument("--bins", type=int, default=30)
    p_eval.add_argument("--levels", type=int, default=100)

    p_dec = sub.add_parser("decide", help="run the restriction-level policy over records")
    p_dec.add_argument("--input", type=Path, required=True, help="records CSV")
    p_dec.add_argument("--output", type=Path, required=True, help="policy JSON to write")
    p_dec.add_argument("--loss", default="paper", help="'paper' or a 2x3 CSV/JSON file")
    return parser


def _cmd_synthetic(args) -> int:
    stream = generate(args.horizon, args.seed)
    # the mixture has no CSV encoding; its quantiles on the canonical grid
    # reproduce it exactly (every interpolation segment is the same normal)
    qs = to_quantile_set(stream.forecasts[0], fileio.SEVEN_LEVEL_GRID)
    fileio.write_forecast_csv(args.output, (qs,) * stream.horizon, stream.outcomes)
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    preset = _resolve_preset()
    config = RunConfig(
        method=args.method,
        uf=args.uf if args.uf is not None else (preset.iw_uf if args.method == "iw" else preset.mw_uf),
        ws=args.ws if args.ws is not None else preset.mw_ws,
        gamma=args.gamma if args.gamma is not None else preset.gamma,
        cap_d=args.cap_d if args.cap_d is not None else preset.cap_d,
        input=args.input,
        output=args.output,
    )
    forecasts, y = fileio.ingest(args.input)
    pairs = [
        (float(parity_prob(forecasts[i], y[i - 1])), parity_outcome(y[i], y[i - 1]))
        for i in range(1, len(y))
    ]
    records = run_stream(config.schedule(), pairs)
    fileio.write_records_csv(args.output, records)
    return EXIT_OK


def _plot_diagram(path: Path, diagram) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    interval = len(diagram.edges) == len(diagram.bins) + 1
    if interval:
        widths = [hi - lo for lo, hi in zip(diagram.edges, diagram.edges[1:])]
        centers = [0.5 * (lo + hi) for lo, hi in zip(diagram.edges, diagram.edges[1:])]
        freq = [b.count / diagram.total for b in diagram.bins]
        ax.bar(centers, freq, width=widths, color="#9ecae1", alpha=0.6, label="frequency")
    xs = [b.pred_avg for b in diagram.bins if not b.empty]
    ys = [b.obs_avg for b in diagram.bins if not b.empty]
    ax.plot([0, 1], [0, 1], "k--", linewidth=0.8)
    ax.plot(xs, ys, "o-", color="#d62728", markersize=3, label="observed")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("predicted probability")
    ax.set_ylabel("observed frequency")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _cmd_evaluate(args) -> int:
    records = fileio.read_records_csv(args.input)
    forecasts = outcomes = None
    if args.forecasts is not None:
        forecasts, outcomes = fileio.ingest(args.forecasts)
    report = metrics_report(
        records,
        n_bins=args.bins,
        n_levels=args.levels,
        forecasts=forecasts,
        outcomes=outcomes,
    )
    fileio.write_metrics_json(args.output, report)
    diagram = parity_reliability(records, n_bins=args.bins)
    diagram_path = args.diagram
    if diagram_path is None:
        diagram_path = args.output.with_suffix(args.output.suffix + ".diagram.csv")
    fileio.write_diagram_csv(diagram_path, diagram)
    if args.plot is not None:
        _plot_diagram(args.plot, diagram)
    return EXIT_OK


def _cmd_decide(args) -> int:
    records = fileio.read_records_csv(args.input)
    loss = fileio.read_loss_matrix(args.loss)
    result = simulate_policy(records, loss)
    fileio.write_policy_json(args.output, result)
    return EXIT_OK


_COMMANDS = {
    "synthetic": _cmd_synthetic,
    "calibrate": _cmd_calibrate,
    "evaluate": _cmd_evaluate,
    "decide": _cmd_decide,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"paritycal: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ParityCalError as exc:
        print(f"paritycal: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"paritycal: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
