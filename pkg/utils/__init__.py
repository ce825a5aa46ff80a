# Krein String Toolkit Utilities
# Shared modules for configuration, history storage, theme and dashboard layout
