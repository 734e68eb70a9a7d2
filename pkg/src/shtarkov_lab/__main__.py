from shtarkov_lab.main import main

main()
