"""Active-space VQE toolkit."""
