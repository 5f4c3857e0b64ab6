"""Closed-form solutions of the worked examples, written out by hand.

These evaluators share no code with the solver (numpy only) so that
comparisons against them are independent checks.
"""
