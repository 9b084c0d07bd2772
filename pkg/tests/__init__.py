# Test configuration and fixtures