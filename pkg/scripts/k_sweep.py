"""Leave-one-subject-out KNN accuracy as a function of k.

    python3 scripts/k_sweep.py --corpus /data/CAD-60 --k 1 2 4 8 16 32
    python3 scripts/k_sweep.py --synthetic --k 1 3 5
"""

import argparse

from skelhar.baselines import KnnParams
from skelhar.dataset import generate_synthetic_corpus, load_corpus
from skelhar.evaluation import MethodSpec, run_loso_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--corpus")
    src.add_argument("--synthetic", action="store_true")
    ap.add_argument("--k", type=int, nargs="+", default=[1, 2, 4, 8, 16])
    ap.add_argument("--mode", default="centre_mirror")
    ap.add_argument("--policy", default="per_scene", choices=["per_scene", "all_actions"])
    args = ap.parse_args()

    corpus = generate_synthetic_corpus(7) if args.synthetic else load_corpus(args.corpus)
    print("k\taccuracy\tpooled")
    for k in args.k:
        rep = run_loso_experiment(corpus, MethodSpec("knn", knn=KnnParams(k)), args.mode, args.policy).report
        print(f"{k}\t{100 * rep.accuracy:.2f}\t{100 * rep.pooled_accuracy:.2f}")


if __name__ == "__main__":
    main()
