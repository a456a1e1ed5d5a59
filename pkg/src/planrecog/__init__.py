"""Goal recognition: plan recognition as planning, a Naive Bayes fluent model and hybrids."""
__version__ = "0.1.0"
