"""Desk-scale domain-adaptation pipeline for low-resource fake news detection:
MLM adaptation of a mini transformer encoder, staged classifier fine-tuning,
and a TF-IDF + linear SVM baseline."""

__version__ = "0.1.0"
