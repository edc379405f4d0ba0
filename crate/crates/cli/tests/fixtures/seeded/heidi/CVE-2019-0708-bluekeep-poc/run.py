import subprocess

subprocess.run(['bluekeep.exe'])
