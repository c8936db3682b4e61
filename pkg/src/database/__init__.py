"""Run registry persistence."""
