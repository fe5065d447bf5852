"""``nsdvqa`` command line: annotate, forge, eval, attribute, report (and synth).

Exit codes: 0 success, 2 usage or configuration error, 3 data error,
4 annotator/provider error. Configuration precedence: config file < flags <
``NSDVQA_*`` environment variables.
"""

from __future__ import annotations

import argparse
import json
import logging
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .annotations import (
    AnnotatorClient,
    AnnotatorConfig,
    AnnotatorError,
    PromptTemplate,
    annotation_from_dict,
    parse_annotations,
    request_many,
    write_annotations,
)
from .attribution import (
    CommandProvider,
    HTTPProvider,
    LedgerError,
    ProviderError,
    SingularSystemError,
    TrialLedger,
    assemble_design,
    contribution_map,
    export_contributions,
    read_cluster_table,
    run_masking_campaign,
    select_lambda,
)
from .config import FORMAT_VERSION, ConfigError, build_manifest, load_config, write_manifest
from .forge import (
    DatasetError,
    ForgeParams,
    TemplateError,
    TemplateSet,
    dataset_stats,
    forge,
    read_dataset,
    read_embeddings,
    write_dataset,
)
from .metrics import ALL_METRICS, EvalReport, PredictionRun, RunError, evaluate_run
from .report import category_table, render_report, render_table, subject_table

logger = logging.getLogger("nsdvqa")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_PROVIDER = 0, 2, 3, 4


class DataError(Exception):
    pass


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None, help="worker threads (outputs do not depend on it)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nsdvqa",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version",
                        version=f"nsdvqa {__version__} (file format {FORMAT_VERSION})")
    sub = parser.add_subparsers(dest="verb", metavar="VERB")

    p = sub.add_parser("annotate", help="query a VLM annotator for structured annotations")
    _common(p)
    p.add_argument("--images", required=True, help="file with one image path or URL per line")
    p.add_argument("--prompt", help="prompt template file (default: bundled annotation prompt)")
    p.add_argument("--output", required=True, help="validated annotations (JSON lines)")
    p.add_argument("--raw-output", help="raw responses (JSON lines)")
    p.add_argument("--offline", action="store_true", help="serve from the cache only")
    p.add_argument("--cache-dir")
    p.add_argument("--source", choices=("annotator_a", "annotator_b"), default=None)

    p = sub.add_parser("forge", help="build the QA dataset from two annotators")
    _common(p)
    p.add_argument("--annotations-a", required=True)
    p.add_argument("--annotations-b", required=True)
    p.add_argument("--embeddings", help="label embeddings (JSON lines {label, vector})")
    p.add_argument("--merge-threshold", dest="merge_threshold", type=float)
    p.add_argument("--min-support", dest="min_support", type=int)
    p.add_argument("--max-share", dest="max_share", type=float)
    p.add_argument("--neg-ratio", dest="neg_ratio", type=float)
    p.add_argument("--skew-mode", dest="skew_mode", choices=("downsample", "drop"))
    p.add_argument("--templates")
    p.add_argument("--output", required=True)
    p.add_argument("--stats", help="write per-category statistics (JSON)")

    p = sub.add_parser("eval", help="score a prediction run")
    _common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--metrics", default="accuracy",
                   help=f"comma-separated subset of {','.join(m for m in ALL_METRICS if m != 'vqa')}")
    p.add_argument("--per-category", action="store_true", help="print the per-category table")
    p.add_argument("--run-id")
    p.add_argument("--subject")
    p.add_argument("--output", help="report JSON (default: <predictions>.report.json)")

    p = sub.add_parser("attribute", help="fit per-cluster contributions")
    _common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--ledger", help="fit an existing trial ledger")
    src.add_argument("--provider", help="provider command line (campaign mode)")
    src.add_argument("--provider-url", help="HTTP provider endpoint (campaign mode)")
    p.add_argument("--dataset", help="QA dataset (campaign mode)")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--sweep", action="store_true", help="choose lambda on held-out trials")
    p.add_argument("--density", type=float)
    p.add_argument("--trials", dest="n_trials", type=int)
    p.add_argument("--stimuli", dest="n_stimuli", type=int)
    p.add_argument("--clusters", dest="n_clusters", type=int)
    p.add_argument("--fixed-subset", action="store_true")
    p.add_argument("--subject")
    p.add_argument("--cluster-table", help="JSON {cluster_id: [voxel ids]} for voxelwise export")
    p.add_argument("--output-dir", required=True)

    p = sub.add_parser("report", help="aggregate eval reports into subject and category tables")
    _common(p)
    p.add_argument("--runs", nargs="+", required=True, help="eval report JSON files, one per subject")
    p.add_argument("--baseline", help="eval report JSON of the baseline system")
    p.add_argument("--bootstrap", dest="n_boot", type=int)
    p.add_argument("--two-sided", action="store_true")
    p.add_argument("--layout", choices=("all", "subjects", "grid"), default="all")
    p.add_argument("--output", help="output prefix; writes <prefix>.txt and <prefix>.tsv")

    p = sub.add_parser("synth", help="write a synthetic annotator corpus for demos and tests")
    _common(p)
    p.add_argument("--images", type=int, default=600)
    p.add_argument("--disagreement", type=float, default=0.1)
    p.add_argument("--output-dir", required=True)
    return parser


def _config(args, **flags):
    return load_config(args.config, {"seed": args.seed, "jobs": args.jobs, **flags})


def _manifest(path, verb, cfg, inputs, outputs):
    write_manifest(str(path) + ".manifest.json", build_manifest(verb, cfg, inputs, outputs))


def _read_annotations(path):
    try:
        result = parse_annotations(path)
    except OSError as exc:
        raise DataError(str(exc)) from exc
    for r in result.rejects:
        logger.warning("%s:%d rejected: %s", path, r.line_no, r.reason)
    return result.annotations


def cmd_annotate(args) -> int:
    cfg = _config(args)
    ann = dict(cfg.annotator)
    if args.offline:
        ann["offline"] = True
    if args.cache_dir:
        ann["cache_dir"] = args.cache_dir
    if args.source:
        ann["source"] = args.source
    acfg = AnnotatorConfig.from_mapping(ann)
    if args.prompt:
        prompt = PromptTemplate.from_file(args.prompt)
    else:
        from importlib import resources
        prompt = PromptTemplate("annotation_prompt",
                                resources.files("nsdvqa.data").joinpath("annotation_prompt.txt").read_text("utf-8"))
    refs = [ln.strip() for ln in Path(args.images).read_text(encoding="utf-8").splitlines() if ln.strip()]
    client = AnnotatorClient(acfg)
    try:
        results = request_many(client, refs, prompt, jobs=cfg.jobs if args.jobs else acfg.max_concurrency)
    finally:
        client.close()
    failures, kept, raw_lines = 0, [], []
    for ref, res in zip(refs, results):
        if isinstance(res, Exception):
            failures += 1
            logger.error("%s: %s", ref, res)
            continue
        raw_lines.append(json.dumps({"image_ref": ref, "image_id": res.image_id, "raw_text": res.raw_text,
                                     "parse_status": res.parse_status}, sort_keys=True, ensure_ascii=False))
        if res.parse_status != "ok":
            logger.warning("%s: malformed annotator output rejected", ref)
            continue
        record = json.loads(res.raw_text)
        record["image_id"] = res.image_id
        record["source"] = acfg.source
        kept.append(annotation_from_dict(record))
    write_annotations(kept, args.output)
    if args.raw_output:
        Path(args.raw_output).write_text("".join(l + "\n" for l in raw_lines), encoding="utf-8")
    _manifest(args.output, "annotate", cfg, [args.images], [args.output, args.raw_output])
    print(f"{len(kept)} annotations written, {len(raw_lines) - len(kept)} malformed, {failures} failed")
    return EXIT_PROVIDER if failures else EXIT_OK


def cmd_forge(args) -> int:
    cfg = _config(args, merge_threshold=args.merge_threshold, min_support=args.min_support,
                  max_share=args.max_share, neg_ratio=args.neg_ratio, skew_mode=args.skew_mode,
                  templates=args.templates)
    a = _read_annotations(args.annotations_a)
    b = _read_annotations(args.annotations_b)
    embeddings = read_embeddings(args.embeddings) if args.embeddings else None
    templates = TemplateSet.load(cfg.templates)
    params = ForgeParams(cfg.merge_threshold, cfg.min_support, cfg.max_share, cfg.neg_ratio,
                         cfg.skew_mode, cfg.seed)
    try:
        result = forge(a, b, params, embeddings, templates, jobs=cfg.jobs)
    except KeyError as exc:
        raise DataError(str(exc)) from exc
    write_dataset(result.dataset, args.output)
    hist = dataset_stats(result.dataset)
    if args.stats:
        with open(args.stats, "w", encoding="utf-8") as fh:
            json.dump({"n_images": len({p.image_id for p in result.dataset}),
                       "n_pairs": hist.total, "counts": hist.counts, "answers": hist.answers,
                       "discarded_objects": len(result.discards), "unpaired_images": result.unpaired,
                       "label_map": {k: v for k, v in result.label_map.items() if k != v}},
                      fh, indent=1, sort_keys=True)
            fh.write("\n")
    _manifest(args.output, "forge", cfg,
              [args.annotations_a, args.annotations_b, args.embeddings, cfg.templates],
              [args.output, args.stats])
    n_img = len({p.image_id for p in result.dataset})
    print(f"{hist.total} QA pairs over {n_img} images in {len(hist.counts)} categories "
          f"({hist.total / max(n_img, 1):.2f} per image)")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _config(args)
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    dataset = read_dataset(args.dataset)
    run = PredictionRun.read(args.predictions, run_id=args.run_id, subject_id=args.subject)
    report = evaluate_run(run, dataset, metrics, jobs=cfg.jobs)
    out = Path(args.output or f"{args.predictions}.report.json")
    out.write_text(report.dumps() + "\n", encoding="utf-8")
    txt = out.with_suffix(".txt")
    text = render_table(subject_table([report]))
    if args.per_category:
        t = category_table([report])
        text += "\n" + render_table(t)
    txt.write_text(text, encoding="utf-8")
    _manifest(out, "eval", cfg, [args.dataset, args.predictions], [out, txt])
    print(text, end="")
    return EXIT_OK


def cmd_attribute(args) -> int:
    cfg = _config(args, lam=args.lam, density=args.density, n_trials=args.n_trials,
                  n_stimuli=args.n_stimuli, n_clusters=args.n_clusters)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    inputs = [args.ledger, args.dataset, args.cluster_table]
    ledger_path = out_dir / "ledger.jsonl"
    if args.ledger:
        ledger = TrialLedger.read(args.ledger)
    else:
        if not args.dataset:
            raise ConfigError("campaign mode needs --dataset")
        dataset = read_dataset(args.dataset)
        provider = (CommandProvider(shlex.split(args.provider)) if args.provider
                    else HTTPProvider(args.provider_url))
        ledger = run_masking_campaign(dataset, provider, cfg.n_clusters, cfg.n_trials, cfg.n_stimuli,
                                      cfg.density, cfg.seed, args.fixed_subset, cfg.jobs, args.subject)
        if not ledger.trials:
            raise ProviderError("every provider call failed")
        ledger.write(ledger_path)
    lam = cfg.lam
    if args.sweep:
        X, Y, _ = assemble_design(ledger)
        ok = np.isfinite(Y).all(axis=1)
        lam, errors = select_lambda(X[ok], Y[ok], seed=cfg.seed)
        logger.info("lambda sweep: %s -> %g", errors, lam)
    cmap = contribution_map(ledger, lam)
    table = out_dir / "contributions.tsv"
    with open(table, "w", encoding="utf-8") as fh:
        fh.write("category\tintercept\t" + "\t".join(f"c{k}" for k in range(cmap.n_clusters)) + "\n")
        for ci, c in enumerate(cmap.categories):
            fh.write("\t".join([c, repr(float(cmap.intercept[ci]))]
                               + [repr(float(v)) for v in cmap.coef[ci]]) + "\n")
    outputs = [table, ledger_path if not args.ledger else None]
    if args.cluster_table:
        outputs += export_contributions(cmap, read_cluster_table(args.cluster_table), out_dir / "voxels")
    (out_dir / "lambda.txt").write_text(repr(float(lam)) + "\n", encoding="utf-8")
    _manifest(table, "attribute", cfg, inputs, outputs)
    print(f"{len(ledger)} trials, {len(cmap.categories)} categories, {cmap.n_clusters} clusters, "
          f"lambda={lam:g}")
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = _config(args, n_boot=args.n_boot,
                  alternative="two-sided" if args.two_sided else None)
    runs = [EvalReport.load(p) for p in args.runs]
    baseline = EvalReport.load(args.baseline) if args.baseline else None
    text, machine = render_report(runs, args.layout, baseline, cfg.n_boot, cfg.seed, cfg.alternative)
    if args.output:
        Path(args.output + ".txt").write_text(text, encoding="utf-8")
        Path(args.output + ".tsv").write_text(machine, encoding="utf-8")
        _manifest(args.output, "report", cfg, list(args.runs) + [args.baseline],
                  [args.output + ".txt", args.output + ".tsv"])
    print(text, end="")
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synthetic import synthetic_corpus, synthetic_embeddings
    cfg = _config(args)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    a, b = synthetic_corpus(args.images, cfg.seed, args.disagreement)
    write_annotations(a, out / "annotations_a.jsonl")
    write_annotations(b, out / "annotations_b.jsonl")
    with open(out / "embeddings.jsonl", "w", encoding="utf-8") as fh:
        for label, vec in synthetic_embeddings(cfg.seed).items():
            fh.write(json.dumps({"label": label, "vector": vec}) + "\n")
    print(f"{args.images} synthetic images written to {out}")
    return EXIT_OK


COMMANDS = {"annotate": cmd_annotate, "forge": cmd_forge, "eval": cmd_eval,
            "attribute": cmd_attribute, "report": cmd_report, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verb is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.verb](args)
    except (ConfigError, TemplateError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AnnotatorError, ProviderError) as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (DataError, DatasetError, RunError, LedgerError, SingularSystemError,
            KeyError, OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
