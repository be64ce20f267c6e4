"""JSON documents, persistence, CLI, and HTTP service for the solvers."""
