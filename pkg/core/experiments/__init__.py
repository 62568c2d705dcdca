"""Ablation studies over mixing strategies and ratios."""
