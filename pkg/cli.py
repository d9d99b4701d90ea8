"""
Command-line entry point: one subcommand per pipeline stage plus the
one-shot ``pipeline``.

    cranial-recon gen-synthetic --output data/synth --n 50 --seed 7
    cranial-recon pipeline --input data/synth --checkpoint runs/unet.cdrn --output runs/p1

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime error.
"""

import argparse
import asyncio
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

logger = logging.getLogger("cranial_recon")

THREAD_VARIABLES = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                    "VECLIB_MAXIMUM_THREADS", "NUMEXPR_NUM_THREADS")

EXIT_OK = 0


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="YAML configuration file")
    parser.add_argument("--profile", choices=["desk", "full"], help="scale profile")
    parser.add_argument("--seed", type=int, help="global seed")
    parser.add_argument("--jobs", type=int, help="worker processes for per-case work")
    parser.add_argument("--ablation", help="training-set recipe tag (T1, T3, Cmb, CReg, ...)")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--fixed-threads", action=argparse.BooleanOptionalAction, default=True,
                        help="pin BLAS/OpenMP to one thread for bitwise reproducibility")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cranial-recon",
                                     description="Cranial defect reconstruction and implant modeling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="write a seeded synthetic dataset")
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--group", choices=["varied", "uniform", "both"])

    p = sub.add_parser("preprocess", help="crop, resample and pad defective skulls")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)

    p = sub.add_parser("augment-register", help="registration-based training-set augmentation")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--preset", choices=["smooth", "imperfect"])
    p.add_argument("--pair-budget", type=int)

    p = sub.add_parser("augment-vae", help="train a VAE and sample new cases")
    p.add_argument("--input", type=Path, nargs="+", required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--checkpoint", type=Path)
    p.add_argument("--n", type=int)

    p = sub.add_parser("train", help="train the reconstruction or refinement network")
    p.add_argument("--input", type=Path, nargs="+", required=True)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--output", type=Path, help="run directory (default: the checkpoint's directory)")
    p.add_argument("--stage", choices=["reconstruct", "refine"], default="reconstruct")
    p.add_argument("--coarse-checkpoint", type=Path)
    p.add_argument("--groups", nargs="+", choices=["varied", "uniform"])

    p = sub.add_parser("reconstruct", help="predict coarse defects")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--threshold", type=float)

    p = sub.add_parser("refine", help="refine postprocessed defects inside their bounding box")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)

    p = sub.add_parser("postprocess", help="map defects back to the original frames")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--original", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)

    p = sub.add_parser("implant", help="thin defects into implants")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--target-volume-ratio", type=float)
    p.add_argument("--step-mm", type=float)
    p.add_argument("--median-radius", type=int)
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--literal-xor", action=argparse.BooleanOptionalAction, default=None)

    p = sub.add_parser("mesh", help="write STL models")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--clip-axis", type=int, choices=[0, 1, 2])
    p.add_argument("--ascii", action=argparse.BooleanOptionalAction, default=None)

    p = sub.add_parser("metrics", help="score predictions against ground truth")
    p.add_argument("--pred", type=Path, required=True)
    p.add_argument("--gt", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--tau-mm", type=float)

    p = sub.add_parser("pipeline", help="run the full reconstruction pipeline")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--refine-checkpoint", type=Path)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--pipeline-file", type=Path, help="alternative pipeline YAML")

    for subparser in sub.choices.values():
        _common_flags(subparser)
    return parser


def _prune(values: Dict[str, Any]) -> Dict[str, Any]:
    """Drop unset flags, and sections left empty by that."""
    pruned = {}
    for key, value in values.items():
        if isinstance(value, dict):
            value = _prune(value)
            if value:
                pruned[key] = value
        elif value is not None:
            pruned[key] = value
    return pruned


def config_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    get = lambda name: getattr(args, name, None)  # noqa: E731
    return _prune({
        "profile": get("profile"),
        "seed": get("seed"),
        "jobs": get("jobs"),
        "ablation": get("ablation"),
        "implant": {
            "target_volume_ratio": get("target_volume_ratio"),
            "step_mm": get("step_mm"),
            "median_radius": get("median_radius"),
            "max_iterations": get("max_iterations"),
            "tolerance": get("tolerance"),
            "literal_xor": get("literal_xor"),
        },
        "mesh": {"clip_axis": get("clip_axis"), "ascii": get("ascii")},
        "metrics": {"tau_mm": get("tau_mm")},
    })


def stage_inputs(args: argparse.Namespace) -> Dict[str, Any]:
    """Agent inputs for a single-stage subcommand."""
    command = args.command
    if command == "gen-synthetic":
        return {"output_dir": args.output, "n": args.n, "seed": args.seed, "group": args.group}
    if command in ("preprocess", "implant", "mesh"):
        return {"input_dir": args.input, "output_dir": args.output}
    if command == "augment-register":
        return {"input_dir": args.input, "output_dir": args.output, "preset": args.preset,
                "pair_budget": args.pair_budget}
    if command == "augment-vae":
        return {"input_dirs": args.input, "output_dir": args.output, "checkpoint": args.checkpoint, "n": args.n}
    if command == "train":
        return {"input_dirs": args.input, "checkpoint": args.checkpoint, "stage": args.stage,
                "coarse_checkpoint": args.coarse_checkpoint, "groups": args.groups}
    if command == "reconstruct":
        return {"input_dir": args.input, "checkpoint": args.checkpoint, "output_dir": args.output,
                "threshold": args.threshold}
    if command == "refine":
        return {"input_dir": args.input, "checkpoint": args.checkpoint, "output_dir": args.output}
    if command == "postprocess":
        return {"input_dir": args.input, "original_dir": args.original, "output_dir": args.output}
    if command == "metrics":
        return {"pred_dir": args.pred, "gt_dir": args.gt, "output_dir": args.output}
    raise ValueError(f"no stage for command '{command}'")


def output_dir(args: argparse.Namespace) -> Path:
    if getattr(args, "output", None) is not None:
        return args.output
    return args.checkpoint.parent


def has_ground_truth(directory: Path) -> bool:
    return directory.is_dir() and any((d / "defect.nrrd").is_file() for d in directory.iterdir() if d.is_dir())


def pin_threads() -> None:
    for name in THREAD_VARIABLES:
        os.environ[name] = "1"


async def _run_stage(args: argparse.Namespace, run_context) -> "AgentResult":  # noqa: F821
    from orchestrator import load_agent_class

    inputs = stage_inputs(args)
    agent_name = args.command.replace("-", "_")
    agent = load_agent_class(agent_name)(agent_id=agent_name, run_context=run_context, config={})
    return await agent.execute(inputs)


async def _run_pipeline(args: argparse.Namespace, run_context) -> Optional["AgentResult"]:  # noqa: F821
    from orchestrator import DEFAULT_PIPELINE, Orchestrator

    orchestrator = Orchestrator(run_context, args.pipeline_file or DEFAULT_PIPELINE)
    context = await orchestrator.run_pipeline(run_context.inputs)
    outputs = context.get("outputs", {})
    if outputs.get("summary"):
        logger.info("Pipeline metrics", extra={"fields": {
            f"{stat}_{name}": round(value, 6)
            for stat, values in outputs["summary"].items() for name, value in values.items()}})
    return orchestrator.failure.result if orchestrator.failure else None


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.fixed_threads:
        pin_threads()

    # numpy and the toolkit load only after the thread variables are set
    from agents.core.agent_base import AgentStatus
    from agents.core.config import load_config
    from agents.core.logging_setup import configure_logging
    from agents.core.run_context import RunContext
    from volume.errors import EXIT_CODES, CranialError, ErrorCategory

    out = output_dir(args)
    configure_logging(args.log_level, out)
    try:
        config, chain = load_config(args.config, config_overrides(args))
    except CranialError as e:
        logger.error(f"Configuration rejected: {e}", extra={"fields": {"error_category": e.category.value}})
        return e.exit_code
    if args.command == "pipeline":
        inputs: Dict[str, Any] = {"input_dir": args.input, "checkpoint": args.checkpoint,
                                  "refine_checkpoint": args.refine_checkpoint,
                                  "ground_truth": has_ground_truth(args.input)}
    else:
        inputs = {k: v for k, v in stage_inputs(args).items() if v is not None}
    run_context = RunContext(config, args.command, out, inputs, chain)
    logger.info("Configuration resolved", extra={"fields": {
        "precedence": " < ".join(chain), "config_hash": run_context.config_hash,
        "command": args.command, "seed": config.seed}})

    exit_code = EXIT_OK
    try:
        if args.command == "pipeline":
            result = asyncio.run(_run_pipeline(args, run_context))
        else:
            result = asyncio.run(_run_stage(args, run_context))
            if result.status == AgentStatus.COMPLETED:
                result = None
    except CranialError as e:
        logger.error(f"{args.command} failed: {e}", extra={"fields": {"error_category": e.category.value}})
        result, exit_code = None, e.exit_code

    if result is not None:
        category = ErrorCategory(result.error_category or ErrorCategory.RUNTIME.value)
        exit_code = EXIT_CODES[category]
        logger.error(f"{args.command} failed: {result.error_details}",
                     extra={"fields": {"error_category": category.value, "status": result.status.value}})
        print(f"error_category={category.value} message={result.error_details!r}", file=sys.stderr)

    run_context.write_manifest()
    return exit_code


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
