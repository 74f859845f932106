"""The ``pynorms`` command line: run, list-scenarios, validate and summarize."""
import argparse
import json
import sys
from typing import List, Optional

import pynorms as pn

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='pynorms', description="Simulate an assistant learning a group's sharing norm.")
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help="Run a batch of simulations and write CSV, JSON and plot data.")
    run.add_argument('--scenario', required=True, help="Scenario file path, or the name of a bundled scenario.")
    run.add_argument('--sims', type=int, default=None, help="Number of simulations (overrides the scenario).")
    run.add_argument('--epochs', type=int, default=None, help="Training epochs per simulation (overrides the scenario).")
    run.add_argument('--seed', type=int, default=None, help="Base seed (overrides the scenario).")
    run.add_argument('--backend', choices=sorted(pn.lm.list_backends()), default=None, help="Language-model backend.")
    run.add_argument('--workers', type=int, default=1, help="Parallel workers.")
    run.add_argument('--out', required=True, help="Output directory.")
    run.add_argument('--quiet', action='store_true', help="Hide the progress bar.")

    sub.add_parser('list-scenarios', help="Print the bundled scenarios.")

    validate = sub.add_parser('validate', help="Check a scenario without running it.")
    validate.add_argument('--scenario', required=True, help="Scenario file path, or the name of a bundled scenario.")

    summarize = sub.add_parser('summarize', help="Recompute the batch summary from a results directory.")
    summarize.add_argument('--in', dest='inp', required=True, help="Directory written by run.")
    return parser


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load(ref: str) -> 'pn.ScenarioConfig':
    return pn.scenarios.resolve_scenario(ref)


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _load(args.scenario)
    overrides = {k: v for k, v in (('n_simulations', args.sims), ('n_epochs', args.epochs), ('seed', args.seed),
                                   ('backend', args.backend)) if v is not None}
    if args.workers < 1:
        raise pn.validate.ScenarioValidationError("command line failed validation:", [('--workers', 'must be at least 1')])
    summary, results = pn.run_batch(cfg, workers=args.workers, verbose=not args.quiet, **overrides)
    written = pn.export_results(results, 'csv', args.out, summary)
    written += pn.export_results(results, 'json', args.out, summary)
    for path in written:
        _err(f"wrote {path}")
    _err(f"{summary.scenario}: {summary.n_completed}/{summary.n_simulations} simulations completed; "
         f"converged policies {summary.policy_distribution}")
    if summary.failures:
        for failure in summary.failures:
            _err(f"simulation {failure['sim_id']} failed: {failure['error']}")
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_list(args: argparse.Namespace) -> int:
    for row in pn.list_scenarios().itertuples():
        print(f"{row.name}\t{row.description}")
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    cfg = _load(args.scenario)
    _err(f"{cfg.name}: ok ({cfg.n_simulations} simulations x {cfg.n_epochs} epochs, "
         f"{cfg.episodes_per_simulation} episodes each)")
    return EXIT_OK


def _cmd_summarize(args: argparse.Namespace) -> int:
    summary = pn.summarize(args.inp)
    print(json.dumps(summary.to_dict(), indent=1))
    return EXIT_OK


_COMMANDS = {'run': _cmd_run, 'list-scenarios': _cmd_list, 'validate': _cmd_validate, 'summarize': _cmd_summarize}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except pn.validate.ScenarioValidationError as e:
        _err(str(e))
        for field, message in e.errors:
            _err(f"  {field}: {message}")
        return EXIT_VALIDATION
    except (FileNotFoundError, KeyError, pn.lm.BackendConfigurationError) as e:
        _err(f"error: {e}")
        return EXIT_VALIDATION
    except (pn.lm.EpochFailureError, PermissionError, OSError, ValueError) as e:
        _err(f"error: {e}")
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(main())
