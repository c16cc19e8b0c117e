"""taanseg: detection and segmentation of taan sections in Hindustani
khayal concert audio, from hand-crafted pitch/energy modulation features
or spectrogram-patch CNN posteriors."""

__version__ = "0.1.0"
