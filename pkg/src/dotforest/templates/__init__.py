"""Default prompt templates, one JSON file per template name."""
