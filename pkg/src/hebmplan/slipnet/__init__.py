from .network import (DEFAULT_NORM_SCALE, HIDDEN1, HIDDEN2, INPUT_DIM,
                      OUTPUT_DIM, SEQ_LEN, WEIGHT_KEYS, WEIGHT_SHAPES,
                      Normalizer, forward, forward_batch, init_weights,
                      zero_like_weights)
from .loss import (GAMMA, LOSS_WEIGHTS, TRAIN_DT, loss_batch, loss_single,
                   predict_body_velocities)
from .gradients import backward_from_output, loss_and_gradients
from .training import (DataInsufficient, TrainingConfig, TrainingReport,
                       adam_step, evaluate, train, zero_slip_baseline)
from .serialize import load_weights, save_weights
