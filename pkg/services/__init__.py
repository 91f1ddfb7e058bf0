"""Services for running consensus experiments."""
