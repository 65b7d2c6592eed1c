"""First-passage Laplace transforms for time-changed spectrally positive Levy processes."""
