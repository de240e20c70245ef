"""Symmetry schema, rotational augmentation and the Gaussian-noise baseline"""
from src.symaug.augment import augment_dataset, gaussian_augment, rotate_batch, rotate_sample
from src.symaug.schema import SymmetrySchema, load_schema

__all__ = [
    "SymmetrySchema",
    "augment_dataset",
    "gaussian_augment",
    "load_schema",
    "rotate_batch",
    "rotate_sample",
]
