"""CP search with GP-evolved variable selectors for resource-constrained job scheduling."""
