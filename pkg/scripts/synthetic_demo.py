"""Desk-scale walk through the pipeline on the generated corpus.

Prints the 1-NN accuracy under each preconditioning mode, then trains a
GWR hierarchy on one fold and reports node counts per layer and the
per-epoch quantization error of the pose layer.
"""

import argparse

import numpy as np

from skelhar.dataset import describe, generate_synthetic_corpus, split_loso
from skelhar.evaluation import MethodSpec, run_loso_experiment
from skelhar.gas import GwrParams, gwr_train, quantization_error
from skelhar.hierarchy import HierarchyConfig, classify, train_hierarchy
from skelhar.precondition import PreconditionMode, apply_preconditioning, stack


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--subjects", type=int, default=4)
    ap.add_argument("--classes", type=int, default=3)
    ap.add_argument("--frames", type=int, default=60)
    args = ap.parse_args()

    corpus = generate_synthetic_corpus(args.seed, args.subjects, args.classes, args.frames)
    info = describe(corpus)
    print(f"{info['recordings']} recordings, {info['frames']} frames, labels: {', '.join(info['labels'])}")

    for mode in PreconditionMode:
        acc = run_loso_experiment(corpus, MethodSpec("knn"), mode, seed=args.seed).report.accuracy
        print(f"1-NN  {mode.value:26s} {100 * acc:6.2f}%")

    split = split_loso(corpus, 1)
    train = apply_preconditioning(split.train, "centre_mirror", "train")
    test = apply_preconditioning(split.test, "centre_mirror", "test")
    params = GwrParams(max_nodes=200, epochs=3)
    models = {
        layer: train_hierarchy(train, HierarchyConfig("gwr", params, classify_at=layer), seed=args.seed)
        for layer in ("l1_pose", "l3_combined")
    }
    for name, graph in models["l3_combined"].layers.items():
        print(f"{name:12s} {len(graph):4d} nodes, dim {graph.dimension}")
    for layer, model in models.items():
        hits = total = 0
        for s in test:
            steps, _ = classify(model, s.vectors)
            hits += int((steps == s.label).sum())
            total += len(steps)
        print(f"subject 1 held out, classify at {layer}: {100 * hits / total:.2f}% of {total} steps")

    X, _ = stack(train)
    errors = []
    gwr_train(X, GwrParams(max_nodes=300, epochs=10), seed=args.seed, on_epoch=lambda e, g: errors.append(quantization_error(g, X)))
    print("pose-layer quantization error per epoch:", np.round(errors, 1).tolist())


if __name__ == "__main__":
    main()
