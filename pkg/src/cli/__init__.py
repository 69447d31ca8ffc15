"""CLI tools for corpus generation, training, evaluation and chat."""
