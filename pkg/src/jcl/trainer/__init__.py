from jcl.trainer.config import TrainConfig, dump_config, load_config
from jcl.trainer.data import SyntheticDataset, SyntheticInstance, augment, augment_batch, dataset_from_config, make_dataset
from jcl.trainer.encoder import EncoderParams, encode, forward, hidden_features, init_encoder
from jcl.trainer.optim import cosine_lr, momentum_update, sgd_step
from jcl.trainer.queue import NegativeQueue, queue_push
from jcl.trainer.train import TrainState, TrainingAborted, init_state, run, train, train_baseline
