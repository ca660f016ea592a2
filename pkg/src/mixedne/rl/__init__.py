"""Two-player VPG and DDPG trainers for NR-MDP action mixing."""
