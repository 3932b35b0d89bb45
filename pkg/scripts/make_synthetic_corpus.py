"""Write a synthetic SPIM corpus plus a matching sweep config.

    python3 scripts/make_synthetic_corpus.py runs/synth --test 50 --train 200
    sparse-impute sweep runs/synth/sweep.yaml
"""
import argparse
from pathlib import Path

import yaml

from sparse_imputation.config import DEFAULT_SHIFTS, DEFAULT_SNRS
from sparse_imputation.synthetic import NOISE_KINDS, write_corpus


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("root")
    p.add_argument("--test", type=int, default=50)
    p.add_argument("--train", type=int, default=200)
    p.add_argument("--bands", type=int, default=23)
    p.add_argument("--atoms", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    root = Path(args.root)
    paths = write_corpus(root, args.test, args.train, args.bands, NOISE_KINDS, seed=args.seed)
    rel = lambda s: str(Path(s).relative_to(root))  # noqa: E731
    config = {
        "dictionary": {"n_atoms": args.atoms, "fragment_frames": 35, "seed": args.seed},
        "sweep": {
            "speech": rel(paths["speech"]),
            "train": rel(paths["train"]),
            "noise": {k: rel(v) for k, v in paths["noise"].items()},
            "snr_db": DEFAULT_SNRS,
            "shifts": DEFAULT_SHIFTS,
            "mask_types": ["oracle", "threshold", "corrected"],
            "seed": args.seed,
            "output": "sweep.csv",
        },
    }
    with open(root / "sweep.yaml", "w") as fh:
        yaml.safe_dump(config, fh, sort_keys=False)
    print(f"wrote corpus and {root / 'sweep.yaml'}")


if __name__ == "__main__":
    main()
