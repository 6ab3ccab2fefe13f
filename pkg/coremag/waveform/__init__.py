# Ce fichier indique que le répertoire waveform est un package Python
