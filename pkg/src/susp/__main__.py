from susp.cli.main import main

main()
