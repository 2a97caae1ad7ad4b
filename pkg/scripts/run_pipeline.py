#!/usr/bin/env python3
"""Run the whole pipeline end to end on a bundled miniature corpus.

The script materializes a two-conversation corpus, its dependency parses, a
small knowledge base, and a vector table under --out-dir, then drives every
CLI stage over those files: extraction, linking, edge construction, graph
assembly, matching evaluation, the classification benchmark, and translation.
Every intermediate artifact stays on disk for inspection.
"""

import argparse
import json
import sys
from pathlib import Path

from convkg.cli import main as cli

URGE_TEXT = "我和上司已经在催促提供物资的商家了"
URGE_ROWS = [
    ("我", "r", 6, "SBV"),
    ("和", "c", 3, "LAD"),
    ("上司", "n", 1, "COO"),
    ("已经", "d", 6, "ADV"),
    ("在", "d", 6, "ADV"),
    ("催促", "v", 0, "HED"),
    ("提供", "v", 10, "ATT"),
    ("物资", "n", 7, "VOB"),
    ("的", "u", 7, "RAD"),
    ("商家", "n", 6, "VOB"),
    ("了", "u", 6, "RAD"),
]
REPLY_TEXT = "商家理解我们"
REPLY_ROWS = [
    ("商家", "n", 2, "SBV"),
    ("理解", "v", 0, "HED"),
    ("我们", "r", 2, "VOB"),
]

KB_ROWS = [
    ("e1", "催促提供物资的商家", "event", "xReact", "难过"),
    ("e1", "催促提供物资的商家", "event", "oEffect", "理解"),
    ("e2", "理解我们", "event", "xReact", "开心"),
    ("e2", "理解我们", "event", "xNeed", "商家"),
    ("n1", "商家", "entity", "xAttr", "忙"),
    ("n2", "物资", "entity", "xAttr", "急需"),
]

# Every text the pipeline embeds sits on its own axis, so exact mentions score
# 1.0 and unrelated pairs score 0.
VECTOR_TEXTS = [
    "催促提供物资的商家", REPLY_TEXT, "上司", "催促", "提供", "物资",
    "商家", "理解", URGE_TEXT, "理解我们",
]


def conllu_block(conv_id, utt_idx, rows):
    lines = [f"# ref = {conv_id}/{utt_idx}/0"]
    for i, (form, pos, head, deprel) in enumerate(rows, start=1):
        lines.append(f"{i}\t{form}\t_\t_\t{pos}\t_\t{head}\t{deprel}\t_\t_")
    return "\n".join(lines) + "\n"


def write_inputs(out_dir: Path) -> dict:
    corpus = out_dir / "corpus.jsonl"
    records = [{"id": "s1", "topic": "工作", "description": "供应链沟通"}]
    for cid in ("c1", "c2"):
        records.append({
            "id": cid,
            "scenario_id": "s1",
            "utterances": [
                {"speaker": "A", "text": URGE_TEXT, "emotion": "sad", "intent": "other"},
                {"speaker": "B", "text": REPLY_TEXT, "emotion": "joy", "intent": "ask"},
            ],
        })
    corpus.write_text(
        "\n".join(json.dumps(r, ensure_ascii=False) for r in records) + "\n", "utf-8")

    parses = out_dir / "parses.conllu"
    blocks = []
    for cid in ("c1", "c2"):
        blocks.append(conllu_block(cid, 0, URGE_ROWS))
        blocks.append(conllu_block(cid, 1, REPLY_ROWS))
    parses.write_text("\n".join(blocks), "utf-8")

    kb = out_dir / "kb.tsv"
    kb.write_text("".join("\t".join(row) + "\n" for row in KB_ROWS), "utf-8")

    vectors = out_dir / "vectors.tsv"
    dim = len(VECTOR_TEXTS)
    lines = [f"dim {dim}"]
    for axis, text in enumerate(VECTOR_TEXTS):
        values = ["1.0" if i == axis else "0.0" for i in range(dim)]
        lines.append(text + "\t" + " ".join(values))
    vectors.write_text("\n".join(lines) + "\n", "utf-8")

    pairs = out_dir / "pairs.jsonl"
    pairs.write_text(json.dumps({"from": "e1", "to": "e2"}) + "\n", "utf-8")

    return {name: str(out_dir / f) for name, f in [
        ("corpus", "corpus.jsonl"), ("parses", "parses.conllu"),
        ("kb", "kb.tsv"), ("vectors", "vectors.tsv"), ("pairs", "pairs.jsonl"),
    ]}


def run_cli(*args):
    print("$ convkg " + " ".join(args))
    cli(list(args), standalone_mode=False)
    print()


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="demo_out")
    ap.add_argument("--seed", type=int, default=1)
    opts = ap.parse_args()

    out_dir = Path(opts.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = write_inputs(out_dir)
    mentions = str(out_dir / "mentions.jsonl")
    matches = str(out_dir / "matches.jsonl")
    edges = str(out_dir / "edges.jsonl")
    graph = str(out_dir / "graph.jsonl")
    translated = str(out_dir / "translated.tsv")

    run_cli("extract", "--corpus", paths["corpus"], "--parses", paths["parses"],
            "--method", "parsing", "--out", mentions)
    run_cli("link", "--mentions", mentions, "--kb", paths["kb"],
            "--vectors", paths["vectors"], "--corpus", paths["corpus"],
            "--parses", paths["parses"], "--out", matches)
    run_cli("build-edges", "--linked", matches, "--corpus", paths["corpus"],
            "--parses", paths["parses"], "--kb", paths["kb"],
            "--min-weight-event", "2", "--min-weight-concept", "2", "--out", edges)
    run_cli("build-graph", "--kb", paths["kb"], "--edges", edges, "--out", graph)
    run_cli("stats", "--graph", graph)
    run_cli("eval-edges", "--graph", graph, "--pairs", paths["pairs"])
    run_cli("scenario", "--graph", graph, "--matches", matches,
            "--scenario-id", "s1", "--fraction", "1.0")
    run_cli("eval-matching", "--corpus", paths["corpus"], "--parses", paths["parses"],
            "--kb", paths["kb"], "--vectors", paths["vectors"],
            "--sample", "4", "--seed", str(opts.seed))
    run_cli("bench", "--graph", graph, "--corpus", paths["corpus"],
            "--parses", paths["parses"], "--vectors", paths["vectors"],
            "--task", "emotion", "--mode", "base",
            "--test-fraction", "0.5", "--seed", str(opts.seed))
    run_cli("translate", "--kb", paths["kb"], "--out", translated)

    print(f"artifacts in {out_dir}/")
    print(f"to browse interactively:  convkg serve --graph {graph} "
          f"--corpus {paths['corpus']}")


if __name__ == "__main__":
    sys.exit(main())
