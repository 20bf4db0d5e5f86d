import json

import numpy as np
from click.testing import CliRunner

from impstudio.cli import annotate_build, reflow_cmd, studio
from impstudio.design import design_to_dict, design_to_json
from impstudio.maps import BinaryMask, mask_line_to_json, mask_to_rle

from conftest import make_design


def write_design(tmp_path, name="design.json", boxes=None):
    design = make_design(boxes or [(10, 10, 30, 20), (60, 60, 25, 25)])
    path = tmp_path / name
    path.write_text(design_to_json(design))
    return path, design


class TestPredictCli:
    def test_writes_map_and_png(self, tmp_path):
        design_path, _ = write_design(tmp_path)
        out = tmp_path / "map.json"
        png = tmp_path / "map.png"
        result = CliRunner().invoke(
            studio,
            ["predict", "--design", str(design_path), "--map-size", "32", "--out", str(out), "--png", str(png)],
        )
        assert result.exit_code == 0, result.output
        payload = json.loads(out.read_text())
        assert payload["map"]["w"] == 32
        assert set(payload["scores"]) == {"e1", "e2"}
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_bad_design_fails_cleanly(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"canvas": {"w": 10}}')
        result = CliRunner().invoke(studio, ["predict", "--design", str(path)])
        assert result.exit_code != 0
        assert "missing" in result.output


class TestOptimizeCli:
    def test_optimizes_and_writes_history(self, tmp_path):
        design_path, _ = write_design(tmp_path)
        targets = tmp_path / "targets.json"
        targets.write_text(json.dumps({"e1": 0.9}))
        ga = tmp_path / "ga.json"
        ga.write_text(json.dumps({"population": 6, "elite": 2, "offspring": 4, "epochs": 2, "seed": 5}))
        out = tmp_path / "best.json"
        hist = tmp_path / "history.json"
        result = CliRunner().invoke(
            studio,
            [
                "optimize",
                "--design", str(design_path),
                "--targets", str(targets),
                "--config", str(ga),
                "--map-size", "32",
                "--out", str(out),
                "--history", str(hist),
            ],
        )
        assert result.exit_code == 0, result.output
        best = json.loads(out.read_text())
        assert len(best["elements"]) == 2
        history = json.loads(hist.read_text())
        assert [h["epoch"] for h in history] == [0, 1]
        assert all(h["population"] == 6 for h in history)


class TestReflowCli:
    def test_standalone_reflow_writes_design_and_pngs(self, tmp_path):
        design_path, _ = write_design(tmp_path, boxes=[(0, 0, 30, 30), (50, 50, 40, 20), (10, 60, 20, 20)])
        out = tmp_path / "reflowed.json"
        before = tmp_path / "before.png"
        after = tmp_path / "after.png"
        result = CliRunner().invoke(
            reflow_cmd,
            [
                "--design", str(design_path),
                "--width", "450",
                "--height", "800",
                "--map-size", "64",
                "--out", str(out),
                "--before-png", str(before),
                "--after-png", str(after),
            ],
        )
        assert result.exit_code == 0, result.output
        reflowed = json.loads(out.read_text())
        assert reflowed["canvas"] == {"w": 450.0, "h": 800.0}
        assert before.exists() and after.exists()

    def test_studio_reflow_subcommand_matches(self, tmp_path):
        design_path, _ = write_design(tmp_path, boxes=[(0, 0, 30, 30), (50, 50, 40, 20)])
        r1 = CliRunner().invoke(
            studio, ["reflow", "--design", str(design_path), "--width", "200", "--height", "100", "--map-size", "64"]
        )
        r2 = CliRunner().invoke(
            reflow_cmd, ["--design", str(design_path), "--width", "200", "--height", "100", "--map-size", "64"]
        )
        assert r1.exit_code == 0 and r2.exit_code == 0
        assert r1.output == r2.output

    def test_count_mismatch_fails(self, tmp_path):
        boxes = [(i * 10.0, 0.0, 8.0, 8.0) for i in range(9)]
        design_path, _ = write_design(tmp_path, boxes=boxes)
        result = CliRunner().invoke(
            reflow_cmd, ["--design", str(design_path), "--width", "100", "--height", "100", "--map-size", "32"]
        )
        assert result.exit_code != 0


def sentinel_file(tmp_path, sid, bits):
    mask = BinaryMask.from_array(bits)
    (tmp_path / f"{sid}.json").write_text(
        json.dumps({"sentinel_id": sid, "w": mask.w, "h": mask.h, "rle": mask_to_rle(mask)})
    )
    return mask


class TestAnnotateBuildCli:
    def test_end_to_end(self, tmp_path):
        sentinels = tmp_path / "sentinels"
        sentinels.mkdir()
        truth_bits = np.zeros((4, 4), dtype=np.uint8)
        truth_bits[:2, :2] = 1
        truth = sentinel_file(sentinels, "s1", truth_bits)

        def mask(bits):
            return BinaryMask.from_array(np.array(bits, dtype=np.uint8).reshape(4, 4))

        good_mask = mask([1, 1, 0, 0] * 2 + [0] * 8)
        lines = []
        for pid, quality in (("pGood", True), ("pBad", False)):
            lines.append(mask_line_to_json("d1", pid, good_mask))
            sentinel_annotation = truth if quality else mask([0] * 12 + [1, 1, 1, 1])
            lines.append(mask_line_to_json("ignored", pid, sentinel_annotation, sentinel_id="s1"))
        masks_file = tmp_path / "masks.jsonl"
        masks_file.write_text("\n".join(lines) + "\n")
        out_dir = tmp_path / "out"
        result = CliRunner().invoke(
            annotate_build,
            ["--in", str(masks_file), "--sentinels", str(sentinels), "--out", str(out_dir)],
        )
        assert result.exit_code == 0, result.output
        report = json.loads((out_dir / "report.json").read_text())
        assert report["accepted_participants"] == ["pGood"]
        assert report["rejections"][0]["participant_id"] == "pBad"
        assert report["designs"]["d1"]["annotators"] == 1
        assert report["designs"]["d1"]["below_minimum"] is True
        map_payload = json.loads((out_dir / "d1.map.json").read_text())
        assert map_payload["w"] == 4 and map_payload["h"] == 4
        assert (out_dir / "d1.png").exists()
