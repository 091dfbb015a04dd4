"""Skeleton-pose activity recognition: CAD-60 loading, preconditioning,
GNG/GWR prototype hierarchies, KNN and linear SVM baselines, and
leave-one-subject-out evaluation."""

__version__ = "0.1.0"
