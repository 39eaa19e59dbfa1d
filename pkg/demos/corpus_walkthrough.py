"""Generate the fixture corpus, run every document through the pipeline and score it.

Usage: python3 demos/corpus_walkthrough.py [OUT_DIR]
"""

import sys
import tempfile
import time
from pathlib import Path

from pdfvisual import GroundTruth, PipelineConfig, run_pipeline
from pdfvisual.fixtures import corpus_providers, generate_corpus
from pdfvisual.pipeline import evaluate_manifest


def fmt(v):
    return "  n/a" if v is None else f"{v:5.2f}"


def main(out_dir: Path) -> None:
    desc = generate_corpus(0, out_dir)
    providers = corpus_providers(out_dir)
    cfg = PipelineConfig()
    print(f"corpus written to {out_dir}\n")
    print(f"{'document':22} pages  table  image   form     DC   text  caption  ms")
    for d in desc["documents"]:
        gt = GroundTruth.load(out_dir / d["ground_truth"])
        t0 = time.perf_counter()
        manifest = run_pipeline(out_dir / d["pdf"], cfg, providers)
        ms = (time.perf_counter() - t0) * 1000
        manifest.write(out_dir / f"{d['name']}.manifest.json")
        r = evaluate_manifest(manifest, gt, cfg.match_iou)
        print(f"{d['name']:22} {d['pages']:5}  {fmt(r.bba_table)}  {fmt(r.bba_image)}  "
              f"{fmt(r.bba_form)}  {fmt(r.dc_overall)}  {fmt(r.text_similarity)}    "
              f"{fmt(r.caption_similarity)}  {ms:4.0f}")

    # show why things were dropped on the two filter-heavy documents
    for name in ("watermark_all_pages", "corner_logo"):
        manifest = run_pipeline(out_dir / f"{name}.pdf", cfg, providers)
        print(f"\n{name}:")
        for p in manifest.pages:
            for el in p.elements:
                status = "kept" if el.keep else "dropped: " + ", ".join(sorted(el.reasons))
                print(f"  page {el.page_index} {el.id:10} {status}")


if __name__ == "__main__":
    if len(sys.argv) > 1:
        target = Path(sys.argv[1])
        target.mkdir(parents=True, exist_ok=True)
        main(target)
    else:
        with tempfile.TemporaryDirectory() as tmp:
            main(Path(tmp))
