"""Recurrent Q-learning for a 20-questions persona-guessing dialog game.

Joint dialog state tracking and dialog policy in one network: a turn
embedding feeding an LSTM belief tracker with separate Q-value heads for
verbal actions (questions + guess) and slot-filling actions (yes/no/unknown),
trained against a corpus-driven user simulator and a queryable persona
database.
"""

__version__ = "0.1.0"
