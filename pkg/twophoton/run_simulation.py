#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Command-line entry point for the TWOPHOTON project.

Subcommands:
    prob      excitation probabilities of one scenario (closed, quadrature, delta)
    sweep     one parameter varied, closed form against quadrature
    g2        correlation map of a preset or explicit window
    enhance   enhancement indices with the frequency anti-correlation width
    validate  delta-function and energy-flow certificates

Exit codes: 0 ok, 1 certificate failure or unexpected error, 2 configuration
error, 3 resource refusal, 4 strict-regime violation.
"""

import argparse
import logging
import os
import sys
from datetime import datetime
from typing import Any, Dict, List, Optional, Union

import pandas as pd

from twophoton.core import (
    TwoPhotonError, ConfigError, GridResolutionError, BudgetExceededError, RegimeViolationError,
    StateKindError, CausalityError, CorrelationStructureError, SpectralWeightError,
)
from twophoton.simulation.config import ScenarioConfig, SweepConfig, load_preset, read_document, PRESETS
from twophoton.simulation.runner import ScenarioRunner, SweepRunner, analyze_sweep, run_certificates, ENERGY_PRESETS
from twophoton.utils.file_utils import (
    dump_json, ensure_directory_exists, records_to_dataframe, to_jsonable, write_dataframe,
)
from twophoton.utils.logging_config import setup_logging
from twophoton.utils.validation import validate_output_document

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_RESOURCE = 3
EXIT_REGIME = 4

SCHEMA_VERSION = 1

# Checked in order; an error outside every group is a plain failure
ERROR_EXIT_CODES = (
    ((GridResolutionError, BudgetExceededError), EXIT_RESOURCE),
    ((RegimeViolationError,), EXIT_REGIME),
    ((ConfigError, StateKindError, CausalityError, CorrelationStructureError, SpectralWeightError), EXIT_CONFIG),
)

logger = logging.getLogger(__name__)


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog='twophoton',
        description='Two-photon two-atom excitation by entangled and separable biphoton states'
    )
    parser.add_argument('--verbose', action='store_true', help='Enable debug output')
    parser.add_argument('--log-file', type=str, default=None,
                        help='Log file path (default: ./logs/twophoton_<timestamp>.log)')
    parser.add_argument('--no-log-file', action='store_true', help='Log to the console only')

    subparsers = parser.add_subparsers(dest='command', required=True)

    def add_common(sub: argparse.ArgumentParser, default_format: str) -> None:
        sub.add_argument('--config', type=str, default=None, help='Scenario JSON document')
        sub.add_argument('--preset', type=str, default=None, help=f"Named preset ({', '.join(PRESETS)})")
        sub.add_argument('--out', type=str, default=None, help='Output path (default: stdout)')
        sub.add_argument('--format', type=str, choices=['csv', 'json'], default=default_format,
                         help=f'Output format (default: {default_format})')
        sub.add_argument('--threads', type=int, default=None,
                         help='Worker threads; affects speed only')

    prob = subparsers.add_parser('prob', help='Excitation probabilities of one scenario')
    add_common(prob, 'json')
    prob.add_argument('--method', type=str, choices=['closed', 'quadrature', 'delta', 'all'], default=None,
                      help='Override the configured method')
    prob.add_argument('--strict', action='store_true',
                      help='Refuse closed forms whose regime conditions do not hold')

    sweep = subparsers.add_parser('sweep', help='Sweep one parameter')
    add_common(sweep, 'csv')

    g2 = subparsers.add_parser('g2', help='Correlation map')
    add_common(g2, 'csv')
    g2.add_argument('--kind', type=str, choices=['time', 'freq'], default=None)
    g2.add_argument('--ranges', type=float, nargs=4, default=None,
                    metavar=('MIN1', 'MAX1', 'MIN2', 'MAX2'))
    g2.add_argument('--resolution', type=int, nargs='+', default=None, help='Samples per axis (one or two values)')
    g2.add_argument('--method', type=str, choices=['auto', 'closed', 'numeric'], default=None)

    enhance = subparsers.add_parser('enhance', help='Enhancement indices')
    add_common(enhance, 'json')

    validate = subparsers.add_parser('validate', help='Numerical certificates')
    validate.add_argument('which', choices=['delta', 'energy', 'all'], nargs='?', default='all')
    validate.add_argument('--function', action='append', default=None, dest='functions',
                          help='Test function for the delta certificate (repeatable)')
    validate.add_argument('--preset', action='append', default=None, dest='presets',
                          help='Scenario preset for the energy certificate (repeatable)')
    validate.add_argument('--out', type=str, default=None, help='Output path (default: stdout)')
    validate.add_argument('--format', type=str, choices=['json'], default='json')
    validate.add_argument('--threads', type=int, default=None)

    return parser.parse_args(argv)


def load_scenario(args: argparse.Namespace) -> Union[ScenarioConfig, SweepConfig]:
    """Scenario or sweep from --config or --preset (exactly one)."""
    if (args.config is None) == (args.preset is None):
        raise ConfigError("Give exactly one of --config or --preset")
    if args.preset is not None:
        return load_preset(args.preset)
    document = read_document(args.config)
    if isinstance(document, dict) and 'sweep' in document:
        return SweepConfig.from_dict(document)
    return ScenarioConfig.from_dict(document)


def _require_scenario(config: Union[ScenarioConfig, SweepConfig]) -> ScenarioConfig:
    if isinstance(config, SweepConfig):
        raise ConfigError("This command needs a scenario, not a sweep")
    return config


def _document(doc_type: str, body: Dict[str, Any]) -> Dict[str, Any]:
    document = {'schema': f"twophoton/{doc_type}/{SCHEMA_VERSION}"}
    document.update(body)
    return document


def emit(payload: Union[Dict[str, Any], pd.DataFrame], out: Optional[str]) -> None:
    """Write a JSON document (validated against the shipped schema) or a CSV table."""
    if isinstance(payload, dict):
        payload = to_jsonable(payload)
        is_valid, message = validate_output_document(payload)
        if not is_valid:
            raise TwoPhotonError(f"Output document does not match its schema: {message}")

    def write(stream) -> None:
        if isinstance(payload, dict):
            dump_json(payload, stream)
        else:
            write_dataframe(payload, stream)

    if out is None:
        write(sys.stdout)
        return
    ensure_directory_exists(os.path.dirname(out))
    with open(out, 'w', newline='') as f:
        write(f)
    logger.info(f"Wrote {out}")


def cmd_prob(args: argparse.Namespace) -> int:
    config = _require_scenario(load_scenario(args))
    if args.method is not None:
        config.method = args.method
    records = ScenarioRunner(config, args.threads).probabilities(strict=args.strict)
    if args.format == 'csv':
        emit(records_to_dataframe(records), args.out)
    else:
        emit(_document('prob', {'scenario': config.name, 'records': records}), args.out)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_scenario(args)
    if not isinstance(config, SweepConfig):
        raise ConfigError("The sweep command needs a document with a 'sweep' section")
    table = SweepRunner(config, args.threads).run()
    if args.format == 'csv':
        emit(table, args.out)
    else:
        emit(_document('sweep', {
            'scenario': config.base.name,
            'variable': config.variable,
            'rows': table.to_dict(orient='records'),
            'analysis': analyze_sweep(table, config.variable),
        }), args.out)
    return EXIT_OK


def cmd_g2(args: argparse.Namespace) -> int:
    config = _require_scenario(load_scenario(args))
    ranges = None
    if args.ranges is not None:
        ranges = [[args.ranges[0], args.ranges[1]], [args.ranges[2], args.ranges[3]]]
    resolution = args.resolution
    if resolution is not None:
        resolution = resolution[0] if len(resolution) == 1 else resolution[:2]
    cmap = ScenarioRunner(config, args.threads).correlation_map(args.kind, ranges, resolution, args.method)
    if args.format == 'csv':
        emit(cmap.to_dataframe(), args.out)
    else:
        emit(_document('g2', cmap.to_dict()), args.out)
    return EXIT_OK


def cmd_enhance(args: argparse.Namespace) -> int:
    config = _require_scenario(load_scenario(args))
    report = ScenarioRunner(config, args.threads).enhancement()
    if args.format == 'csv':
        emit(records_to_dataframe([report]), args.out)
    else:
        emit(_document('enhance', {'scenario': config.name, **report}), args.out)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    reports = run_certificates(args.which, args.functions, args.presets or ENERGY_PRESETS, args.threads)
    passed = all(report.passed for report in reports)
    emit(_document('validate', {
        'which': args.which,
        'passed': passed,
        'certificates': [report.to_dict() for report in reports],
    }), args.out)
    return EXIT_OK if passed else EXIT_FAILURE


COMMANDS = {
    'prob': cmd_prob,
    'sweep': cmd_sweep,
    'g2': cmd_g2,
    'enhance': cmd_enhance,
    'validate': cmd_validate,
}


def exit_code(error: TwoPhotonError) -> int:
    """Exit status for a domain error."""
    for classes, code in ERROR_EXIT_CODES:
        if isinstance(error, classes):
            return code
    return EXIT_FAILURE


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    args = parse_arguments(argv)

    log_level = logging.DEBUG if args.verbose else logging.INFO
    setup_logging(log_level, args.log_file, file_logging=not args.no_log_file)

    logger.info(f"Starting twophoton {args.command} at {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    try:
        status = COMMANDS[args.command](args)
    except TwoPhotonError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return exit_code(e)
    except Exception as e:
        logger.exception(f"twophoton {args.command} failed: {str(e)}")
        return EXIT_FAILURE

    logger.info(f"Finished twophoton {args.command} with status {status}")
    return status


if __name__ == "__main__":
    sys.exit(main())
