"""Command-line entry point: ``pdfvisual parse|eval|fixtures``.

Exit codes: 0 success, 1 input error, 2 internal failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from .backend import PyMuPDFBackend, _read
from .config import PipelineConfig
from .metrics import EvalInputError, GroundTruth
from .pipeline import Providers, evaluate_manifest, process_pages
from .primitives import EncryptedPdf, MalformedPdf
from .providers import StubOcrProvider, png_bytes

log = logging.getLogger("pdfvisual")

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


class InputError(Exception):
    """Bad user input: missing files, unreadable config, mismatched data."""


def _load_config(path: str | None, stub: bool) -> PipelineConfig:
    try:
        cfg = PipelineConfig.load(path) if path else PipelineConfig()
    except (OSError, ValueError, TypeError) as exc:
        raise InputError(f"invalid config {path}: {exc}") from exc
    cfg = cfg.with_env_overrides()
    if stub:
        cfg = replace(cfg, provider="stub")
    return cfg


def _load_plants(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read OCR plants {path}: {exc}") from exc
    return dict(data.get("ocr_plants", data))


def _parse_one(pdf: str, out_dir: str, cfg: PipelineConfig, plants: dict[str, str]) -> str:
    try:
        data = _read(pdf)
    except OSError as exc:
        raise InputError(f"cannot read {pdf}: {exc}") from exc
    backend = PyMuPDFBackend()
    try:
        pages = backend.load(data)
    except (MalformedPdf, EncryptedPdf) as exc:
        raise InputError(f"{pdf}: {exc}") from exc

    providers = Providers.from_config(cfg)
    if plants and isinstance(providers.ocr, StubOcrProvider):
        providers.ocr = StubOcrProvider(plants)

    manifest = process_pages(pages, cfg, providers, hashlib.sha256(data).hexdigest())

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest.write(out / "manifest.json")
    for el in manifest.kept_elements():
        if el.raster is None:
            raster = backend.render_region(data, el.page_index, el.bbox, cfg.render_zoom)
        else:
            raster = el.raster
        (out / f"{el.id}.png").write_bytes(png_bytes(raster))
    return str(out / "manifest.json")


def cmd_parse(args) -> int:
    cfg = _load_config(args.config, args.stub_providers)
    plants = _load_plants(args.ocr_plants)
    for pdf in args.pdf:
        if not Path(pdf).is_file():
            raise InputError(f"input file not found: {pdf}")
    if len(args.pdf) == 1:
        targets = [(args.pdf[0], args.out)]
    else:
        stems = [Path(p).stem for p in args.pdf]
        if len(set(stems)) != len(stems):
            raise InputError("input files must have distinct names")
        targets = [(p, str(Path(args.out) / s)) for p, s in zip(args.pdf, stems)]

    if args.jobs > 1 and len(targets) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_parse_one, p, o, cfg, plants) for p, o in targets]
            written = [f.result() for f in futures]
    else:
        written = [_parse_one(p, o, cfg, plants) for p, o in targets]
    for w in written:
        print(w)
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read manifest {args.manifest}: {exc}") from exc
    try:
        gt = GroundTruth.load(args.gt)
        report = evaluate_manifest(manifest, gt, args.tau_match)
    except (EvalInputError, ValueError, KeyError) as exc:
        raise InputError(str(exc)) from exc
    text = report.to_json() + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_fixtures(args) -> int:
    from .fixtures import generate_corpus

    desc = generate_corpus(args.seed, args.out)
    print(f"wrote {len(desc['documents'])} documents to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pdfvisual",
                                 description="Extract tables, forms and figures from PDFs.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="write manifest.json and element PNGs")
    p.add_argument("pdf", nargs="+")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--stub-providers", action="store_true",
                   help="use offline stub embedding and OCR providers")
    p.add_argument("--ocr-plants", help="JSON map of raster digest to OCR text for the stub")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_parse)

    e = sub.add_parser("eval", help="score a manifest against ground truth")
    e.add_argument("--manifest", required=True)
    e.add_argument("--gt", required=True)
    e.add_argument("--out")
    e.add_argument("--tau-match", type=float, default=0.8)
    e.set_defaults(func=cmd_eval)

    f = sub.add_parser("fixtures", help="generate the annotated fixture corpus")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fixtures)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        log.exception("internal failure")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
