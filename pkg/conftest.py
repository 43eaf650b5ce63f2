# Puts the repository root on sys.path so src/tests can import rbx uninstalled.
