import json
import subprocess
import sys

from PIL import Image

from pdfvisual.cli import main


def test_parse_writes_manifest_and_pngs(corpus, tmp_path, capsys):
    root, _ = corpus
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"logo_refs_path": str(root / "logo_refs.txt")}))
    out = tmp_path / "out"
    code = main(["parse", str(root / "watermark_all_pages.pdf"), "--out", str(out),
                 "--config", str(cfg), "--stub-providers",
                 "--ocr-plants", str(root / "corpus.json")])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    kept = [e["id"] for p in manifest["pages"] for e in p["elements"] if e["keep"]]
    assert kept == ["p1-img1"]
    assert sorted(f.name for f in out.glob("*.png")) == ["p1-img1.png"]
    assert Image.open(out / "p1-img1.png").size[0] > 0


def test_parse_renders_tables(corpus, tmp_path):
    root, _ = corpus
    out = tmp_path / "t"
    assert main(["parse", str(root / "bordered_table.pdf"), "--out", str(out)]) == 0
    assert (out / "p0-tbl0.png").is_file()


def test_parse_many_with_jobs(corpus, tmp_path):
    root, _ = corpus
    pdfs = [str(root / f"{n}.pdf") for n in ("fragmented_2", "fragmented_3")]
    assert main(["parse", *pdfs, "--out", str(tmp_path), "--jobs", "2"]) == 0
    assert (tmp_path / "fragmented_2" / "manifest.json").is_file()
    assert (tmp_path / "fragmented_3" / "manifest.json").is_file()


def test_missing_input_exits_1(tmp_path, capsys):
    assert main(["parse", str(tmp_path / "nope.pdf"), "--out", str(tmp_path)]) == 1
    assert "not found" in capsys.readouterr().err


def test_malformed_input_exits_1(tmp_path):
    bad = tmp_path / "bad.pdf"
    bad.write_bytes(b"garbage")
    assert main(["parse", str(bad), "--out", str(tmp_path / "o")]) == 1


def test_eval_roundtrip_and_mismatch(corpus, tmp_path):
    root, _ = corpus
    out = tmp_path / "m"
    assert main(["parse", str(root / "table_title.pdf"), "--out", str(out)]) == 0
    report = tmp_path / "report.json"
    assert main(["eval", "--manifest", str(out / "manifest.json"),
                 "--gt", str(root / "table_title.gt.json"), "--out", str(report)]) == 0
    assert json.loads(report.read_text())["bba_table"] == 1.0
    # a ground truth with a different page count is an input error
    assert main(["eval", "--manifest", str(out / "manifest.json"),
                 "--gt", str(root / "corner_logo.gt.json")]) == 1


def test_fixtures_command(tmp_path, capsys):
    assert main(["fixtures", "--seed", "3", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "corpus.json").is_file()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "pdfvisual.cli", "parse",
                           str(tmp_path / "missing.pdf"), "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 1
