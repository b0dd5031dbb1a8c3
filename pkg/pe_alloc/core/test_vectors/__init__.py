"""Known-answer vectors for rates, unit conversions and path loss."""
