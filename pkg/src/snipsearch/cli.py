"""Command-line interface.

Every command exits 0 on success and nonzero with a single-line JSON error
on failure. Commands that randomize accept --seed and write canonical,
byte-stable output files. SNIPSEARCH_INDEX supplies the default --index.
"""

from __future__ import annotations

import json
import sys

import click

from . import __version__
from .alphabet import Alphabet, get_profile
from .errors import SnipSearchError
from .ingest import canonical_json, load_index, parse_coco_layout, parse_form_layout, save_index
from .layout import BBox
from .metrics import evaluate_files
from .mining import dataset_stats, load_pairs, mine_pairs, save_pairs, split_seen_unseen
from .search import SearchRequest, search_snippet


def _fail(exc: Exception) -> None:
    if isinstance(exc, SnipSearchError):
        payload = {"error": exc.to_dict()}
    else:
        payload = {"error": {"code": "internal", "message": str(exc)}}
    click.echo(json.dumps(payload, sort_keys=True), err=True)
    sys.exit(1)


def _resolve_alphabet(spec: str) -> Alphabet:
    if spec in ("flamingo", "publaynet"):
        return get_profile(spec)
    return Alphabet.from_file(spec)


index_option = click.option(
    "--index",
    "index_path",
    envvar="SNIPSEARCH_INDEX",
    required=True,
    help="Path to a corpus index file (or set SNIPSEARCH_INDEX).",
)


@click.group()
@click.version_option(version=__version__, prog_name="snipsearch")
def main():
    """Layout-string snippet search toolkit."""


@main.command()
@click.option("--format", "fmt", type=click.Choice(["coco", "form"]), required=True)
@click.option("--alphabet", default="publaynet", show_default=True,
              help="Profile name (flamingo, publaynet) or a JSON alphabet file.")
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, help="Index file to write.")
def ingest(fmt, alphabet, input_path, out_path):
    """Parse an annotation file and write a corpus index."""
    try:
        with open(input_path, "r", encoding="utf-8") as fh:
            data = fh.read()
        parse = parse_coco_layout if fmt == "coco" else parse_form_layout
        corpus = parse(data, _resolve_alphabet(alphabet))
        save_index(corpus, out_path)
        click.echo(json.dumps({"corpus_id": corpus.corpus_id, "n_pages": len(corpus)}))
    except Exception as exc:
        _fail(exc)


@main.command()
@index_option
@click.option("--th-sim", default=0.92, show_default=True)
@click.option("--min-len", default=2, show_default=True)
@click.option("--max-len", default=8, show_default=True)
@click.option("--samples", "samples_per_page", default=4, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--workers", default=1, show_default=True)
@click.option("--out", "out_path", required=True, help="Pair dataset (JSONL) to write.")
def mine(index_path, th_sim, min_len, max_len, samples_per_page, seed, workers, out_path):
    """Mine query-target pairs from a corpus."""
    try:
        corpus = load_index(index_path)
        pairs = mine_pairs(
            corpus, th_sim=th_sim, min_len=min_len, max_len=max_len,
            samples_per_page=samples_per_page, rng_seed=seed, workers=workers,
        )
        save_pairs(pairs, out_path)
        click.echo(json.dumps({"n_pairs": len(pairs), "out": out_path}))
    except Exception as exc:
        _fail(exc)


@main.command()
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True, help="Print machine-readable stats.")
def stats(pairs_path, as_json):
    """Dataset statistics for a mined pair file."""
    try:
        st = dataset_stats(load_pairs(pairs_path))
        payload = {
            "n_pairs": st.n_pairs,
            "n_unique_layout_strings": st.n_unique_layout_strings,
            "length_histogram": {str(k): v for k, v in st.length_histogram.items()},
        }
        if as_json:
            click.echo(canonical_json(payload))
        else:
            click.echo(f"pairs: {st.n_pairs}")
            click.echo(f"unique layout strings: {st.n_unique_layout_strings}")
            for length, count in st.length_histogram.items():
                click.echo(f"  len {length}: {count}")
    except Exception as exc:
        _fail(exc)


@main.command()
@click.option("--train", "train_path", required=True, type=click.Path(exists=True))
@click.option("--test", "test_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True)
def split(train_path, test_path, out_path):
    """Label test pairs seen/unseen by exact layout-string reuse."""
    try:
        train = load_pairs(train_path)
        test = load_pairs(test_path)
        labels = split_seen_unseen(train, test)
        with open(out_path, "w", encoding="utf-8") as fh:
            for pair, label in zip(test, labels):
                fh.write(canonical_json({"label": label, "query_lstr": pair.query.lstr}))
                fh.write("\n")
        counts = {"seen": labels.count("seen"), "unseen": labels.count("unseen")}
        click.echo(json.dumps(counts, sort_keys=True))
    except Exception as exc:
        _fail(exc)


@main.command()
@index_option
@click.option("--doc", "doc_id", required=True)
@click.option("--page", "page_no", default=0, show_default=True)
@click.option("--bbox", "bbox_spec", required=True, help="x0,y0,x1,y1 in page units.")
@click.option("--th", "th_sim", default=0.92, show_default=True)
@click.option("--max-results", default=50, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def search(index_path, doc_id, page_no, bbox_spec, th_sim, max_results, as_json):
    """Search a drawn rectangle against every page of the corpus."""
    try:
        corpus = load_index(index_path)
        coords = [float(v) for v in bbox_spec.split(",")]
        if len(coords) != 4:
            raise SnipSearchError("bbox must be x0,y0,x1,y1")
        request = SearchRequest(
            query_region=(doc_id, page_no, BBox(*coords)),
            th_sim=th_sim,
            max_results=max_results,
        )
        response = search_snippet(corpus, request)
        if as_json:
            click.echo(canonical_json(response.to_dict()))
        else:
            click.echo(f"query lstr: {response.query_lstr}")
            for m in response.matches:
                box = ",".join(f"{v:g}" for v in m.bbox.as_list())
                click.echo(f"  {m.doc_id} p{m.page_no} score={m.score:.4f} bbox={box}")
    except Exception as exc:
        _fail(exc)


@main.command(name="eval")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--gt", "gt_path", required=True, type=click.Path(exists=True))
@click.option("--conf", default=0.4, show_default=True)
@click.option("--nms", "nms_iou", default=0.45, show_default=True)
@click.option("--report", "report_path", default=None, help="Write the report JSON here.")
def eval_cmd(pred_path, gt_path, conf, nms_iou, report_path):
    """Detection metrics for a predictions file against mined pairs."""
    try:
        pairs = load_pairs(gt_path)
        report = evaluate_files(pred_path, pairs, conf_th=conf, nms_iou=nms_iou)
        body = canonical_json(report.to_dict())
        if report_path:
            with open(report_path, "w", encoding="utf-8") as fh:
                fh.write(body)
                fh.write("\n")
        click.echo(body)
    except Exception as exc:
        _fail(exc)


@main.command()
@click.argument("method", type=click.Choice(["ssd", "ncc"]))
@index_option
@click.option("--pairs", "pairs_path", required=True, type=click.Path(exists=True))
@click.option("--cell", "cell_size", default=4.0, show_default=True)
@click.option("--accept", "accept_threshold", default=None, type=float,
              help="Score acceptance cutoff (<= for ssd, >= for ncc).")
@click.option("--out", "out_path", required=True, help="Predictions JSONL to write.")
def baseline(method, index_path, pairs_path, cell_size, accept_threshold, out_path):
    """Template-matching baseline detections over mined pairs."""
    try:
        from .baselines import template_detections

        corpus = load_index(index_path)
        pairs = load_pairs(pairs_path)
        per_pair = template_detections(corpus, pairs, method, cell_size, accept_threshold)
        with open(out_path, "w", encoding="utf-8") as fh:
            for pair_id, dets in enumerate(per_pair):
                fh.write(canonical_json({
                    "pair_id": pair_id,
                    "detections": [
                        {"bbox": d.bbox.as_list(), "score": d.score} for d in dets
                    ],
                }))
                fh.write("\n")
        total = sum(len(d) for d in per_pair)
        click.echo(json.dumps({"pairs": len(pairs), "detections": total, "out": out_path}))
    except Exception as exc:
        _fail(exc)


@main.command(name="human-eval")
@click.option("--counts", "counts_path", required=True, type=click.Path(exists=True),
              help="CSV of per-split or per-sample judgment counts.")
@click.option("--json", "as_json", is_flag=True)
def human_eval(counts_path, as_json):
    """Precision/recall/F1 report for a human-study counts file."""
    try:
        from .metrics import human_study_report, read_human_counts

        report = human_study_report(read_human_counts(counts_path))
        if as_json:
            click.echo(canonical_json(report))
        else:
            for split, row in report["splits"].items():
                cells = ", ".join(f"{k}={v}" for k, v in row.items())
                click.echo(f"{split}: {cells}")
            if "average" in report:
                cells = ", ".join(f"{k}={v}" for k, v in report["average"].items())
                click.echo(f"average: {cells}")
    except Exception as exc:
        _fail(exc)


@main.command(name="fusion-check")
@click.option("--profile", type=click.Choice(["paper", "tiny"]), default="tiny",
              show_default=True)
@click.option("--seed", default=0, show_default=True)
def fusion_check(profile, seed):
    """Run the fusion forward pass and print its shape/invariant report."""
    try:
        import numpy as np

        from .fusion import (
            FusionConfig,
            attention_probabilities,
            init_fuse_weights,
            pad_sequence,
            run_fusion,
        )

        config = FusionConfig.full_scale() if profile == "paper" else FusionConfig.tiny()
        weights = init_fuse_weights(config, seed=seed)
        rng = np.random.default_rng(seed)
        valid = max(1, config.seq_len // 2)

        def make(d):
            return pad_sequence(rng.standard_normal((valid, d)), config.seq_len)

        inputs = {
            "qv": make(config.d_vis), "qt": make(config.d_txt), "qs": make(config.d_spa),
            "tv": make(config.d_vis), "tt": make(config.d_txt), "ts": make(config.d_spa),
        }
        volume = run_fusion(inputs, weights, config)
        probs = attention_probabilities(
            inputs["qv"], inputs["tv"], weights.vv.ab, config.n_heads
        )
        row_sums = probs[:, :, : inputs["tv"].valid_len].sum(axis=-1)
        row_ok = bool(np.allclose(row_sums[:, :valid], 1.0, atol=1e-6))
        report = {
            "profile": profile,
            "f_sim": list(volume.f_sim.shape),
            "f_feat": list(volume.f_feat.shape),
            "pyramid": [list(level.shape) for level in volume.pyramid],
            "attention_rows_sum_to_one": row_ok,
        }
        click.echo(json.dumps(report))
        if not row_ok:
            sys.exit(1)
    except Exception as exc:
        _fail(exc)


@main.command()
@index_option
@click.option("--port", default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--cors", is_flag=True, help="Allow cross-origin browser requests.")
def serve(index_path, port, host, cors):
    """Serve the read-only search API over HTTP."""
    try:
        from .server import serve as run_server

        run_server([index_path], host=host, port=port, cors=cors)
    except Exception as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
