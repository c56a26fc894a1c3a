"""rfeval: evaluating generative image models with randomly initialized
feature networks."""

__version__ = "0.1.0"
