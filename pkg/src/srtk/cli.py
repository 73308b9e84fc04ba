"""Batch command-line front end.

Subcommands: canonize (prompt regularization), chaos (prompt
corruption), assemble (histogram-equalized adaptation manifests),
refine (plausibility refinement), evaluate (DICE/ASD tables), and ks
(intensity-shift matrices). Every command is deterministic given its
inputs, flags, and seed; reruns produce byte-identical outputs. Inputs
are never mutated; all writes land under the requested output path.

Exit codes: 0 full success, 1 configuration error or abort, 2 partial
failure (some cases or lines failed; the rest were still written).
Diagnostics go to stderr as line-delimited JSON events.
"""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import click
import numpy as np

from . import __version__
from .core import AdaptManifest, GridImage, LabelMask
from .chaos import ChaosConfig, generate_chaos
from .errors import PromptError, ToolkitError
from .imgproc import histogram_equalize, histogram_equalize_slices, intensity_samples
from .metrics import aggregate, evaluate_case, ks_statistic, render_csv, render_markdown
from .plausibility import load_priors, refine_mask
from .prompts import (
    Lexicon,
    MetaPromptConfig,
    canonicalize_llm,
    canonicalize_lexicon,
    emit_canonical,
    http_transport,
    join_batch,
    split_batch,
)
from .tensor_io import read_pnm, read_tensor, write_pnm, write_tensor

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2

_TENSOR_SUFFIXES = (".srt1", ".pnm", ".pgm", ".ppm")


class PartialFailure(ToolkitError):
    """Some units of work failed; the successes were still written."""


def log_event(**fields) -> None:
    sys.stderr.write(json.dumps(fields, sort_keys=True) + "\n")


def _read_any(path: Path):
    if path.suffix.lower() == ".srt1":
        return read_tensor(path)
    return read_pnm(path)


def _write_like(obj, src: Path, dst: Path) -> None:
    if src.suffix.lower() == ".srt1":
        write_tensor(obj, dst)
    else:
        write_pnm(obj, dst)


def _case_files(directory: Path) -> dict[str, Path]:
    return {
        p.stem: p
        for p in sorted(directory.iterdir())
        if p.is_file() and p.suffix.lower() in _TENSOR_SUFFIXES
    }


def _match_cases(primary: dict[str, Path], other: dict[str, Path], primary_name: str,
                 other_name: str) -> list[str]:
    """Stems present in both; abort listing every orphan otherwise."""
    orphans = sorted(set(primary) ^ set(other))
    if orphans:
        for stem in orphans:
            where = primary_name if stem in primary else other_name
            log_event(event="unmatched_case", case=stem, only_in=where)
        raise ToolkitError(
            f"unmatched cases between {primary_name} and {other_name}: {orphans}"
        )
    return sorted(primary)


def _deterministic_timestamp(paths) -> str:
    """ISO-8601 provenance timestamp that is stable across reruns.

    SOURCE_DATE_EPOCH wins when set; otherwise the newest input mtime.
    """
    env = os.environ.get("SOURCE_DATE_EPOCH")
    if env is not None:
        ts = int(env)
    else:
        mtimes = [int(Path(p).stat().st_mtime) for p in paths]
        ts = max(mtimes) if mtimes else 0
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _run_cases(jobs: int, case_ids: list[str], work):
    """Run per-case work, optionally in parallel; results keyed by case."""
    if jobs <= 1:
        return {cid: work(cid) for cid in case_ids}
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = {cid: pool.submit(work, cid) for cid in case_ids}
        return {cid: f.result() for cid, f in futures.items()}


def load_pipeline_config(path: Path) -> dict:
    """Per-command flag defaults from TOML or JSON (flags override)."""
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        obj = tomllib.loads(text)
    else:
        obj = json.loads(text)
    if not isinstance(obj, dict):
        raise ToolkitError("pipeline config must be a table of per-command sections")
    return obj


def _normalize_default_map(group: click.Group, raw: dict) -> dict:
    """Translate config keys (flag spellings) into click parameter names."""
    out: dict = {}
    for cmd_name, section in raw.items():
        cmd = group.commands.get(cmd_name)
        if cmd is None or not isinstance(section, dict):
            out[cmd_name] = section
            continue
        stem_to_name = {}
        for p in cmd.params:
            for opt in getattr(p, "opts", []):
                if opt.startswith("--"):
                    stem_to_name[opt[2:].replace("-", "_")] = p.name
        out[cmd_name] = {
            stem_to_name.get(k.replace("-", "_"), k.replace("-", "_")): v
            for k, v in section.items()
        }
    return out


@click.group(name="srtk")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="TOML or JSON file of per-command flag defaults; explicit flags override it.")
@click.version_option(version=__version__)
@click.pass_context
def cli(ctx, config_path: Path | None):
    """Segmentation refinement toolkit."""
    if config_path is not None:
        ctx.default_map = _normalize_default_map(cli, load_pipeline_config(config_path))


@cli.command("canonize")
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True, help="Input file, one raw [SEP] batch per line.")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True, help="Lexicon JSON for deterministic canonicalization.")
@click.option("--llm", "llm_config", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None, help="LLM config (TOML or JSON); switches to the HTTP path.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), required=True)
def cmd_canonize(in_path: Path, lexicon_path: Path, llm_config: Path | None, out_path: Path):
    """Canonicalize prompt batches, one per input line."""
    lexicon = Lexicon.load(lexicon_path)
    transport = None
    cfg = None
    if llm_config is not None:
        cfg = MetaPromptConfig.load(llm_config)
        transport = http_transport(cfg)

    lines = in_path.read_text(encoding="utf-8").splitlines()
    out_lines: list[str] = []
    failures = 0
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            batch = split_batch(line)
            if transport is None:
                canon = canonicalize_lexicon(batch, lexicon)
            else:
                canon = canonicalize_llm(
                    batch, cfg, transport, modalities=lexicon.modality_vocab()
                )
            out_lines.append(join_batch(emit_canonical(p) for p in canon))
        except ToolkitError as e:
            failures += 1
            log_event(event="canonize_failed", line=lineno, error=str(e))
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("".join(l + "\n" for l in out_lines), encoding="utf-8")
    log_event(event="canonize_done", lines=len(lines), written=len(out_lines), failed=failures)
    if failures:
        raise PartialFailure(f"{failures} line(s) failed")


@cli.command("chaos")
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True, help="Input file, one prompt per line.")
@click.option("--tau", type=float, required=True, help="Target chaos level in [0, 100].")
@click.option("--seed", type=int, required=True)
@click.option("--candidates", type=int, default=50, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), required=True)
def cmd_chaos(in_path: Path, tau: float, seed: int, candidates: int, out_path: Path):
    """Corrupt each prompt toward a target chaos level."""
    records = []
    prompts = [l for l in in_path.read_text(encoding="utf-8").splitlines() if l.strip()]
    for index, prompt in enumerate(prompts):
        derived = (seed ^ index) & ((1 << 64) - 1)
        cfg = ChaosConfig(tau=tau, candidates=candidates, seed=derived)
        perturbed, achieved = generate_chaos(prompt, cfg)
        records.append(
            {
                "original": prompt,
                "perturbed": perturbed,
                "target_level": tau,
                "achieved_score": achieved,
                "seed": derived,
            }
        )
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(records, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log_event(event="chaos_done", prompts=len(records), tau=tau, seed=seed)


@cli.command("assemble")
@click.option("--images", "images_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--pseudolabels", "labels_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), required=True, help="Manifest JSON path; equalized copies go next to it.")
@click.option("--levels", type=int, default=256, show_default=True)
@click.option("--per-slice", is_flag=True, help="Equalize 3-D volumes slice by slice.")
def cmd_assemble(images_dir: Path, labels_dir: Path, out_path: Path, levels: int, per_slice: bool):
    """Equalize images and emit the adaptation-set manifest."""
    images = _case_files(images_dir)
    labels = _case_files(labels_dir)
    case_ids = _match_cases(images, labels, "images", "pseudolabels")

    out_dir = out_path.parent / "equalized"
    out_dir.mkdir(parents=True, exist_ok=True)
    pairs = []
    for cid in case_ids:
        img = _read_any(images[cid])
        if not isinstance(img, GridImage):
            raise ToolkitError(f"case {cid}: image file does not hold an image")
        lab = _read_any(labels[cid])
        if not isinstance(lab, LabelMask):
            raise ToolkitError(f"case {cid}: pseudo-label file does not hold a mask")
        if img.dims != lab.dims:
            raise ToolkitError(
                f"case {cid}: image dims {img.dims} != label dims {lab.dims}"
            )
        if per_slice and len(img.dims) == 3:
            eq = histogram_equalize_slices(img, levels)
        else:
            eq = histogram_equalize(img, levels)
        dst = out_dir / images[cid].name
        _write_like(eq, images[cid], dst)
        pairs.append((os.path.relpath(dst, out_path.parent), str(labels[cid])))
        log_event(event="assembled", case=cid)

    manifest = AdaptManifest(
        pairs=tuple(pairs),
        source_prompts=(),
        priors_table="",
        created=_deterministic_timestamp(list(images.values()) + list(labels.values())),
    )
    manifest.dump(out_path)
    log_event(event="assemble_done", cases=len(pairs), manifest=str(out_path))


@cli.command("refine")
@click.option("--masks", "masks_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--images", "images_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--probs", "probs_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), default=None)
@click.option("--priors", "priors_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--connectivity", type=click.Choice(["4", "8", "6", "26"]), default=None, help="Component connectivity; defaults to 8 (2-D) / 26 (3-D).")
@click.option("--report", "report_path", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--jobs", type=int, default=1, show_default=True)
def cmd_refine(masks_dir, images_dir, probs_dir, priors_path, out_dir, connectivity, report_path, jobs):
    """Refine predicted masks against per-class Beta priors."""
    priors = load_priors(priors_path)
    masks = _case_files(masks_dir)
    images = _case_files(images_dir)
    case_ids = _match_cases(masks, images, "masks", "images")
    probs = None
    if probs_dir is not None:
        probs = _case_files(probs_dir)
        case_ids = _match_cases(masks, probs, "masks", "probs")
    conn = int(connectivity) if connectivity is not None else None
    out_dir.mkdir(parents=True, exist_ok=True)

    def work(cid: str):
        mask = _read_any(masks[cid])
        image = _read_any(images[cid])
        pmap = _read_any(probs[cid]) if probs is not None else None
        refined, report = refine_mask(
            mask, pmap, image, priors, connectivity=conn, mask_id=cid
        )
        _write_like(refined, masks[cid], out_dir / masks[cid].name)
        return report.to_json_dict()

    reports = _run_cases(jobs, case_ids, work)
    for cid in case_ids:
        log_event(event="refined", case=cid, removed_voxels=reports[cid]["removed_voxels"])
    if report_path is not None:
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(
            json.dumps({cid: reports[cid] for cid in case_ids}, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    log_event(event="refine_done", cases=len(case_ids))


@cli.command("evaluate")
@click.option("--pred", "pred_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--gt", "gt_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), required=True, help="CSV report path.")
@click.option("--md", "md_path", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Optional Markdown table path.")
@click.option("--jobs", type=int, default=1, show_default=True)
def cmd_evaluate(pred_dir, gt_dir, out_path, md_path, jobs):
    """Per-case and aggregate DICE/ASD with the N/A convention."""
    preds = _case_files(pred_dir)
    gts = _case_files(gt_dir)
    case_ids = _match_cases(preds, gts, "pred", "gt")

    def work(cid: str):
        try:
            return evaluate_case(_read_any(preds[cid]), _read_any(gts[cid]), cid)
        except ToolkitError as e:
            return e

    outcomes = _run_cases(jobs, case_ids, work)
    results = []
    failures = 0
    for cid in case_ids:
        if isinstance(outcomes[cid], ToolkitError):
            failures += 1
            log_event(event="evaluate_failed", case=cid, error=str(outcomes[cid]))
        else:
            results.append(outcomes[cid])
    if not results:
        raise ToolkitError("no case could be evaluated")
    report = aggregate(results)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(render_csv(results, report), encoding="utf-8")
    if md_path is not None:
        md_path.parent.mkdir(parents=True, exist_ok=True)
        md_path.write_text(render_markdown(report), encoding="utf-8")
    log_event(event="evaluate_done", cases=len(results), failed=failures,
              mean_dice=report.mean_dice, mean_asd=report.mean_asd)
    if failures:
        raise PartialFailure(f"{failures} case(s) failed")


@cli.command("ks")
@click.option("--a", "a_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--b", "b_dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--mask", "mask_dirs", type=click.Path(exists=True, file_okay=False, path_type=Path), multiple=True, help="Optional mask dir(s): one applies to both sets, two apply to a and b respectively.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), required=True)
def cmd_ks(a_dir, b_dir, mask_dirs, out_path):
    """Kolmogorov-Smirnov matrix over pooled intensity samples."""
    if len(mask_dirs) > 2:
        raise ToolkitError("--mask accepts at most two directories")
    mask_a = mask_dirs[0] if mask_dirs else None
    mask_b = mask_dirs[1] if len(mask_dirs) == 2 else mask_a

    def pooled(directory: Path, mask_dir: Path | None):
        files = _case_files(directory)
        if not files:
            raise ToolkitError(f"no tensor files in {directory}")
        masks = _case_files(mask_dir) if mask_dir is not None else None
        samples = []
        for cid in sorted(files):
            img = _read_any(files[cid])
            m = None
            if masks is not None:
                if cid not in masks:
                    raise ToolkitError(f"no mask for case {cid} in {mask_dir}")
                m = _read_any(masks[cid])
            samples.append(intensity_samples(img, m))
        return np.concatenate(samples)

    sa = pooled(a_dir, mask_a)
    sb = pooled(b_dir, mask_b)
    d = ks_statistic(sa, sb)
    out = {
        "sets": ["a", "b"],
        "samples": [int(sa.size), int(sb.size)],
        "matrix": [[0.0, d], [d, 0.0]],
    }
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log_event(event="ks_done", statistic=d)


def main(argv=None) -> int:
    """Entry point with the stable exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except PartialFailure as e:
        log_event(event="partial_failure", error=str(e))
        return EXIT_PARTIAL
    except click.UsageError as e:
        log_event(event="usage_error", error=e.format_message())
        return EXIT_CONFIG
    except click.ClickException as e:
        log_event(event="error", error=e.format_message())
        return EXIT_CONFIG
    except click.exceptions.Abort:
        log_event(event="aborted")
        return EXIT_CONFIG
    except (ToolkitError, OSError, ValueError) as e:
        log_event(event="error", error=str(e))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
