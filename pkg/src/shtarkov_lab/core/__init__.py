"""Experts, hypothesis classes and likelihoods."""
