""" Command line tools of the dcc package: deep copula classifier toolkit

This submodule provides the `dcc` command line utility running the synthetic
dependence experiment and the PIMA experiment from a JSON configuration.

See license and disclaimer at the top level directory of this project.

"""

import dcc
import dcc.config
import dcc.tools.experiments
import argparse
import logging
import logging.config
import os
import sys

from tqdm.cli import tqdm

__toolname__ = "dcc.tools.dcc_cli"

#: Exit code of a successful run
EXIT_OK = 0

#: Exit code of an internal error
EXIT_INTERNAL = 1

#: Exit code of usage, configuration and input file errors
EXIT_USAGE = 2


def valid_modes(modes: str) -> list:
    """Checks a comma separated list of marginal modes

    Args:
        modes (str): e.g. oracle_normal,pooled

    Raises:
        argparse.ArgumentTypeError: If a mode is unknown

    Returns:
        list: Mode names
    """
    names = [m.value for m in dcc.MarginalMode]
    result = [m.strip() for m in modes.split(",") if m.strip()]
    for mode in result:
        if mode not in names:
            raise argparse.ArgumentTypeError(
                f"{mode} is not a marginal mode ({', '.join(names)})")
    return result


def load_config(args) -> dcc.config.ExperimentConfig:
    """Reads --config and applies the command line overrides"""
    raw_text = ""
    if args.config is not None:
        with open(args.config, "r", encoding="utf-8") as f:
            raw_text = f.read()
    overrides = {
        "experiment": args.experiment,
        "seed": args.seed,
        "output_dir": args.out,
        "modes": args.modes,
        "n_seeds": args.nseeds,
        "n_jobs": args.njobs,
        "input_csv": getattr(args, "csv", None)}
    return dcc.config.validate_config(raw_text, overrides)


def run_experiment(args):
    logger = logging.getLogger(__toolname__ + '.run_experiment')
    config = load_config(args)
    startmsg = f"Running {config.experiment} experiment to: " \
               f"'{config.output_dir}'"
    print(f"{startmsg}")
    logger.info(f"{config.experiment},,{startmsg}")

    pbar = tqdm(desc=f"Training {config.experiment} copulas", unit=" epochs")
    mycb = dcc.tools.experiments.ProgressCallBack(pbar)
    if config.experiment == "synthetic":
        runs = dcc.tools.experiments.run_synthetic(config, mycb)
    else:
        runs = dcc.tools.experiments.run_pima(config, mycb)
    pbar.close()

    for run in runs:
        for m in run.models:
            print(f"seed {run.seed} {m.name}: "
                  f"accuracy={m.report.accuracy:.4f} "
                  f"roc_auc={m.report.roc_auc:.4f} "
                  f"pr_auc={m.report.pr_auc:.4f} ece={m.report.ece:.4f}")
    logger.info(f"{config.experiment},,Experiment finished")
    return runs


def add_run_arguments(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--config",
        type=str,
        help="JSON configuration file (default: built-in defaults)")
    parser.add_argument(
        "--seed",
        type=int,
        help="Seed of the first run (overrides the configuration)")
    parser.add_argument(
        "--out",
        type=str,
        help="Output directory for the CSV and JSON reports (overrides the "
             "configuration)")
    parser.add_argument(
        "--modes",
        type=valid_modes,
        help="Comma separated marginal modes, e.g. "
             "oracle_normal,pooled,per_class (overrides the configuration)")
    parser.add_argument(
        "--nseeds",
        type=int,
        help="Number of consecutive seeds to run (overrides the "
             "configuration)")
    parser.add_argument(
        "--njobs",
        type=int,
        help="Number of processes training the per-class copulas in "
             "parallel (overrides the configuration)")


def main(argv: list = None) -> int:
    # Default logging configuration file
    logging_conf_file = os.path.normpath(
        os.path.join(
            os.path.dirname(dcc.core.__file__),
            'cfg/dcc_logging.conf'))

    # Command line options, arguments and sub-commands
    options = argparse.ArgumentParser(prog="dcc")
    # Print version
    options.add_argument(
        "--version",
        help='Print the version of the software package',
        action='version',
        version=f'dcc package version {dcc.__version__}')
    # Logging configuration file argument
    options.add_argument(
        "-l", "--logconffile", type=str,
        help=f'logging configuration file (default: {logging_conf_file})',
        default=logging_conf_file)

    commands = options.add_subparsers()

    # Synthetic dependence experiment
    parser_synthetic = commands.add_parser(
        "synthetic",
        help="Runs the two-class correlated Gaussian experiment")
    add_run_arguments(parser_synthetic)
    parser_synthetic.set_defaults(func=run_experiment,
                                  experiment="synthetic")

    # PIMA experiment
    parser_pima = commands.add_parser(
        "pima",
        help="Runs the PIMA Indians Diabetes experiment")
    add_run_arguments(parser_pima)
    parser_pima.add_argument(
        "--csv",
        type=str,
        help="PIMA Indians Diabetes CSV file (overrides the configuration)")
    parser_pima.set_defaults(func=run_experiment, experiment="pima")

    # Parse command line
    try:
        args = options.parse_args(argv)
    except SystemExit as ex:
        return EXIT_OK if ex.code in (0, None) else EXIT_USAGE
    if not hasattr(args, "func"):
        options.print_usage(sys.stderr)
        return EXIT_USAGE

    # Load logging configuration
    try:
        logging.config.fileConfig(args.logconffile,
                                  disable_existing_loggers=False)
    except (OSError, KeyError) as ex:
        print(f"Cannot load logging configuration {args.logconffile}: {ex}",
              file=sys.stderr)
        return EXIT_USAGE
    logger = logging.getLogger(__toolname__)

    # Print to console logging filename/s (if any)
    for h in logger.root.handlers:
        if isinstance(h, logging.FileHandler):
            print(
                f"Logging to {h.baseFilename} file with a "
                f"{type(h).__name__}")

    # Execute command functions
    try:
        args.func(args)
    except dcc.ConfigError as ex:
        logger.error(f",,Invalid configuration: {ex}")
        print(f"Invalid configuration: {ex}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as ex:
        logger.error(f",,{ex}")
        print(f"{ex}", file=sys.stderr)
        return EXIT_USAGE
    except dcc.StageError as ex:
        logger.error(f",,{ex}")
        print(f"{ex}", file=sys.stderr)
        if ex.stage == "load data":
            return EXIT_USAGE
        return EXIT_INTERNAL
    except Exception as ex:
        logger.exception(f",,Internal error: {ex}")
        print(f"Internal error: {ex}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
