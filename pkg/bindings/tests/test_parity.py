"""Golden cross-check: binding outputs must be bit-identical to the CLI
running on the same data written to SRT1 files."""

import json

import numpy as np
import pytest

from srtk.cli import main as cli_main
from srtk_bindings import BufferView, bind_metrics, bind_refine, __version__

import synth_fixtures


def mask_view(mask) -> BufferView:
    return BufferView(
        data=mask.labels.astype("<u1").tobytes(),
        dims=mask.dims,
        spacing=mask.spacing,
        dtype="u8",
    )


def image_view(img) -> BufferView:
    return BufferView(
        data=np.ascontiguousarray(img.values).tobytes(),
        dims=img.dims,
        spacing=img.spacing,
        dtype="u8",
    )


def prob_view(pm) -> BufferView:
    return BufferView(
        data=np.ascontiguousarray(pm.probs).astype("<f4").tobytes(),
        dims=pm.dims,
        spacing=pm.spacing,
        dtype="f32",
    )


@pytest.fixture(scope="module")
def cli_outputs(tmp_path_factory):
    root = tmp_path_factory.mktemp("parity")
    dirs = synth_fixtures.write_fixture_tree(root)
    refined = root / "refined"
    report = root / "report.json"
    assert cli_main([
        "refine", "--masks", str(dirs["masks"]), "--images", str(dirs["images"]),
        "--probs", str(dirs["probs"]), "--priors", str(dirs["priors"]),
        "--out", str(refined), "--report", str(report),
    ]) == 0
    csv_path = root / "eval.csv"
    assert cli_main([
        "evaluate", "--pred", str(refined), "--gt", str(dirs["gt"]),
        "--out", str(csv_path),
    ]) == 0
    return dirs, refined, report, csv_path


def cli_mask_payload(path) -> bytes:
    blob = path.read_bytes()
    return blob[blob.index(b"\n") + 1:]


class TestBindRefineParity:
    def test_bit_identical_masks_and_reports(self, cli_outputs):
        dirs, refined_dir, report_path, _ = cli_outputs
        cli_reports = json.loads(report_path.read_text())
        for i in range(synth_fixtures.N_CASES):
            case = f"case{i}"
            pred, img, pmap, _ = synth_fixtures.build_case(i)
            payload, report_json = bind_refine(
                mask_view(pred),
                image_view(img),
                prob_view(pmap),
                str(dirs["priors"]),
                class_names=synth_fixtures.CLASS_NAMES,
                class_labels=(1, 2),
                mask_id=case,
            )
            assert payload == cli_mask_payload(refined_dir / f"{case}.srt1")
            canonical_cli = json.dumps(cli_reports[case], indent=2, sort_keys=True)
            assert report_json == canonical_cli

    def test_empty_mask_round_trip(self, cli_outputs):
        dirs = cli_outputs[0]
        dims = (4, 4)
        empty = BufferView(bytes(16), dims, (1.0, 1.0), "u8")
        img = BufferView(bytes(16), dims, (1.0, 1.0), "u8")
        payload, report_json = bind_refine(
            empty, img, None, str(dirs["priors"]), class_names={}
        )
        assert payload == bytes(16)
        assert json.loads(report_json)["removed_voxels"] == 0

    def test_bad_dims_carries_primary_error_text(self, cli_outputs):
        dirs = cli_outputs[0]
        mask = BufferView(bytes(16), (4, 4), (1.0, 1.0), "u8")
        img = BufferView(bytes(9), (3, 3), (1.0, 1.0), "u8")
        with pytest.raises(Exception, match="grid"):
            bind_refine(mask, img, None, str(dirs["priors"]), class_names={})

    def test_buffer_length_validated(self):
        with pytest.raises(ValueError, match="does not match dims"):
            BufferView(bytes(10), (4, 4), (1.0, 1.0), "u8").to_array()


class TestBindMetricsParity:
    def test_identity(self):
        m = BufferView(bytes([0, 1, 1, 0]), (2, 2), (1.0, 1.0), "u8")
        out = bind_metrics(m, m)
        assert out == {"dice": 1.0, "asd": 0.0}

    def test_empty_prediction_convention(self):
        empty = BufferView(bytes(4), (2, 2), (1.0, 1.0), "u8")
        full = BufferView(bytes([1, 1, 1, 1]), (2, 2), (1.0, 1.0), "u8")
        out = bind_metrics(empty, full)
        assert out["dice"] == 0.0
        assert out["asd"] is None

    def test_matches_evaluate_rows(self, cli_outputs):
        dirs, refined_dir, _, csv_path = cli_outputs
        rows = {}
        for line in csv_path.read_text().splitlines()[1:]:
            kind, case, cls, dice_s, asd_s = line.split(",")
            if kind == "case":
                rows[(case, cls)] = (dice_s, asd_s)
        for i in range(synth_fixtures.N_CASES):
            case = f"case{i}"
            refined_payload = cli_mask_payload(refined_dir / f"{case}.srt1")
            pred = BufferView(refined_payload, synth_fixtures.DIMS,
                              synth_fixtures.SPACING, "u8")
            gt_mask = synth_fixtures.build_case(i)[3]
            gt = mask_view(gt_mask)
            for label, cls in synth_fixtures.CLASS_NAMES.items():
                out = bind_metrics(pred, gt, label=label)
                dice_s, asd_s = rows[(case, cls)]
                assert repr(out["dice"]) == dice_s
                assert (asd_s == "N/A") == (out["asd"] is None)
                if out["asd"] is not None:
                    assert repr(out["asd"]) == asd_s


def test_version_mirrors_primary():
    import srtk

    assert __version__ == srtk.__version__
