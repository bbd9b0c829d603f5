"""Regenerates the toy fixture set. Output is committed; rerun only when changing it."""
import json
from pathlib import Path

import numpy as np

from evalkit.core import write_tensor

HERE = Path(__file__).parent / "toy"

UTTS = [
    ("u01", "the cat sat on the mat", 2.4, "native", "male", "adult", "white", "frontal"),
    ("u02", "we should go there tomorrow", 1.6, "non_native", "female", "young", "other", "extreme"),
    ("u03", "it's a long way to the station", 3.1, "native", "female", "old", "black", "frontal"),
    ("u04", "nobody expected that answer", 1.2, "unknown", "male", "adult", "white", "unknown"),
    ("u05", "the results were better than last year", 4.8, "native", "male", "adult", "white", "frontal"),
    ("u06", "please close the door", 0.9, "non_native", "male", "young", "other", "extreme"),
    ("u07", "they built a bridge across the river", 3.9, "native", "female", "adult", "white", "frontal"),
    ("u08", "i don't think so", 0.7, "non_native", "female", "old", "black", "extreme"),
    ("u09", "science is a way of thinking", 2.0, "native", "unknown", "adult", "unknown", "frontal"),
    ("u10", "music brings people together", 5.5, "unknown", "male", "unknown", "white", "frontal"),
    ("u11", "there is boarding buses", 1.8, "native", "male", "adult", "white", "extreme"),
    ("u12", "keep your eyes on the road", 2.6, "non_native", "female", "adult", "other", "frontal"),
]

MODEL_A = {
    "u01": "the cat sat on the mat", "u02": "we should go there tomorrow",
    "u03": "it's a long way to station", "u04": "nobody expected the answer",
    "u05": "the results were better than last year", "u06": "please close the floor",
    "u07": "they built a bridge across the river", "u08": "i think so",
    "u09": "science is a way of thinking", "u10": "music bring people",
    "u11": "sporting business", "u12": "keep your eyes on the road",
}
MODEL_B = {
    "u01": "the cat sat on a mat", "u02": "we go there",
    "u03": "it is long way to the nation", "u04": "nobody expected",
    "u05": "results were better", "u06": "",
    "u07": "they bit a bridge across river", "u08": "i don't think so",
    "u09": "science a way thinking", "u10": "music brings people together",
    "u11": "the boarding bus", "u12": "keep your eyes on road",
}


def main():
    HERE.mkdir(exist_ok=True)
    with open(HERE / "manifest.jsonl", "w") as fh:
        for uid, ref, dur, acc, gen, age, eth, pose in UTTS:
            row = {"id": uid, "ref": ref, "duration_s": dur, "num_frames": round(dur * 25),
                   "attrs": {"accent": acc, "gender": gen, "age": age, "ethnicity": eth, "pose": pose},
                   "source_video": f"vid_{uid}.mp4"}
            fh.write(json.dumps(row) + "\n")
    for name, hyps in (("model_a", MODEL_A), ("model_b", MODEL_B)):
        with open(HERE / f"{name}.jsonl", "w") as fh:
            for uid, hyp in hyps.items():
                fh.write(json.dumps({"id": uid, "hyp": hyp}) + "\n")
    (HERE / "pairs.csv").write_text(
        "model_id,wer_a,wer_b\nm1,20.0,40.0\nm2,30.0,52.0\nm3,40.0,66.0\nm4,25.0,47.0\n"
    )
    (HERE / "recipe.toml").write_text(
        'name = "toy_ssl"\nencoder_params = "52.4M"\ndecoder_params = "10.1M"\n\n'
        '[[stages]]\nlabel = "pretrain"\nkind = "pretrain_dual_encoder"\nhours = 433\nepochs = 150\n\n'
        '[[stages]]\nlabel = "finetune"\nkind = "finetune_encoder_decoder"\nhours = 30\nepochs = 50\n'
    )
    rng = np.random.default_rng(7)
    b, t, d = 10, 16, 12
    time = np.arange(t)
    data = (np.einsum("b,t,d->btd", rng.standard_normal(b), np.sin(time / 3.0), rng.standard_normal(d)) * 3
            + 0.1 * rng.standard_normal((b, t, d)))
    write_tensor(HERE / "lrs3_sample.vtf", data, dtype="float32")

    bad = HERE.parent / "bad"
    bad.mkdir(exist_ok=True)
    lines = (HERE / "manifest.jsonl").read_text().splitlines()
    (bad / "manifest_duplicate.jsonl").write_text("\n".join(lines[:3] + [lines[0]]) + "\n")
    (bad / "manifest_broken.jsonl").write_text(lines[0] + "\n{not json\n")
    (bad / "hyp_unknown_id.jsonl").write_text(json.dumps({"id": "zzz", "hyp": "hello"}) + "\n")
    (bad / "tensor_truncated.vtf").write_bytes((HERE / "lrs3_sample.vtf").read_bytes()[:-4])


if __name__ == "__main__":
    main()
