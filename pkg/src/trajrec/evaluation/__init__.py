"""Ground-truth synthesis, comparison metrics, cluster accuracy and parameter sweeps."""
