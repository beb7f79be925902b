"""
One module per subcommand, each exposing register() and handle()
"""
