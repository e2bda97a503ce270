"""Hate and offensive speech classification with from-scratch BiLSTM/CNN models,
tweet preprocessing, augmentation, multi-seed evaluation and Integrated
Gradients explanations."""

__version__ = "0.1.0"
