"""Semiconjugacy of degree-D circle maps to angle multiplication, folds, and complexity measures."""
